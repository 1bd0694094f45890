import numpy as np
import pandas as pd
import pytest
from scipy import stats

from qaoatrust.stats import significance_table, wilcoxon_signed_rank


def test_shifted_sample_is_significant() -> None:
    x = np.arange(20, dtype=float)
    res = wilcoxon_signed_rank(x, x + 1)
    assert res.n == 20
    assert res.p_value < 0.001
    assert res.z > 0
    assert res.statistic == 0.0
    assert res.effect_size == pytest.approx(abs(res.z) / np.sqrt(20))


def test_identical_samples_raise() -> None:
    x = np.linspace(0, 1, 15)
    with pytest.raises(ValueError, match="non-zero"):
        wilcoxon_signed_rank(x, x)
    with pytest.raises(ValueError):
        wilcoxon_signed_rank(x, x[:-1])


def test_matches_scipy_normal_approximation() -> None:
    rng = np.random.default_rng(0)
    x = rng.normal(size=40)
    y = x + rng.normal(0.2, 1.0, size=40)
    y[:6] = x[:6] + np.round(y[:6] - x[:6], 1)
    ours = wilcoxon_signed_rank(x, y)
    ref = stats.wilcoxon(y - x, method="approx", correction=False)
    assert ours.statistic == pytest.approx(ref.statistic)
    assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-9)


def _results(pairs: int) -> pd.DataFrame:
    rows = []
    for i in range(pairs):
        for method, evals in (("uq_qaoa", 20 + i % 3), ("random", 200 + 2 * i), ("gnn_point", 60 + i)):
            rows.append(
                {"instance": f"g{i}", "seed": i, "method": method, "evals": evals, "wall_ms": float(evals), "ratio": 0.9}
            )
    return pd.DataFrame(rows)


def test_significance_table() -> None:
    table = significance_table(_results(12))
    assert list(table.columns) == ["method", "baseline", "metric", "pairs", "statistic", "z", "p_value", "effect_size"]
    evals = table[(table["baseline"] == "random") & (table["metric"] == "evals")].iloc[0]
    assert evals["pairs"] == 12
    assert evals["p_value"] < 0.01
    heuristic = table[table["baseline"] == "heuristic"]
    assert (heuristic["pairs"] == 0).all()
    assert heuristic["p_value"].isna().all()


def test_direction_sets_the_sign_of_z() -> None:
    rng = np.random.default_rng(5)
    x = rng.normal(size=30)
    y = x + rng.normal(0.5, 1.0, size=30)
    up, down = wilcoxon_signed_rank(x, y), wilcoxon_signed_rank(y, x)
    assert up.z > 0 > down.z
    assert up.z == pytest.approx(-down.z)
    assert up.p_value == pytest.approx(down.p_value)
    assert up.statistic == down.statistic
