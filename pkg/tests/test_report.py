from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from qaoatrust.graphs import generate
from qaoatrust.report import (
    budget_bins,
    build_report,
    cumulative_evals,
    gate_totals,
    reliability,
    speedup_vs_n,
)
from qaoatrust.trust import allocate_budget


def _results() -> pd.DataFrame:
    rows = []
    for i in range(12):
        n = 8 if i < 6 else 10
        for method, evals, wall in (("random", 240, 100.0), ("uq_qaoa", 20 + i, 10.0)):
            rows.append(
                {
                    "instance": f"test-ER-n{n}-{i:03d}",
                    "family": "ER",
                    "n": n,
                    "method": method,
                    "seed": i,
                    "evals": evals,
                    "best_f": 10.0,
                    "ratio": 0.9 - 0.01 * i if method == "uq_qaoa" else 0.95,
                    "wall_ms": wall,
                }
            )
    return pd.DataFrame(rows)


def _allocations() -> pd.DataFrame:
    rows = []
    for i in range(12):
        u = 0.1 * i
        budget = allocate_budget(u, 0.5, 0.3, 10)
        rows.append({"instance": f"test-ER-n{8 if i < 6 else 10}-{i:03d}", "seed": i, "U": u, "z": budget.z, "K": budget.k, "T": budget.t, "evals": 20 + i})
    return pd.DataFrame(rows)


def test_speedup_vs_n() -> None:
    table = speedup_vs_n(_results())
    uq = table[table["method"] == "uq_qaoa"].set_index("n")
    assert uq.loc[8, "speedup"] == pytest.approx(10.0)
    assert uq.loc[8, "eval_speedup"] == pytest.approx(240 / 22.5)
    assert (table.loc[table["method"] == "random", "speedup"] == 1.0).all()


def test_cumulative_evals_ends_at_totals() -> None:
    table = cumulative_evals(_results())
    last = table.groupby("method")["cumulative_evals"].last()
    assert last["random"] == 12 * 240
    assert last["uq_qaoa"] == sum(20 + i for i in range(12))
    assert table.groupby("method")["step"].max().eq(12).all()


def test_budget_bins_are_monotone() -> None:
    table = budget_bins(_allocations())
    assert len(table) == 5
    assert table["count"].sum() == 12
    assert np.all(np.diff(table["budget_mean"]) >= 0)
    assert np.all(np.diff(table["u_mean"]) > 0)


def test_reliability_uses_trust_region_runs() -> None:
    table = reliability(_results(), _allocations())
    assert len(table) == 10
    assert table["count"].sum() == 12
    assert table["mean_observed"].iloc[-1] > table["mean_observed"].iloc[0]


def test_gate_totals() -> None:
    results = _results()
    graphs = {instance: generate("ER", int(n), 0) for instance, n in zip(results["instance"], results["n"])}
    table = gate_totals(results, graphs, p=2).set_index("method")
    g = graphs["test-ER-n8-000"]
    assert table.loc["random", "evals"] == 12 * 240
    assert table.loc["random", "cnot"] > 12 * 240 * (4 * 2 * g.m) * 0.5


def test_build_report(tmp_path: Path) -> None:
    _results().to_csv(tmp_path / "results.csv", index=False)
    _allocations().to_csv(tmp_path / "allocations.csv", index=False)
    frames = build_report(tmp_path, tmp_path / "figures")
    assert set(frames) == {
        "runtime_bars",
        "eval_bars",
        "speedup_vs_n",
        "cumulative_evals",
        "budget_scatter",
        "budget_bins",
        "reliability_deciles",
    }
    for name in frames:
        assert (tmp_path / "figures" / f"{name}.csv").is_file()
    assert "wall_ms_mean" in frames["runtime_bars"].columns


def test_build_report_without_results(tmp_path: Path) -> None:
    with pytest.raises(FileNotFoundError, match="evaluate"):
        build_report(tmp_path)
