"""Plot-ready data files derived from benchmark results."""

import logging
from pathlib import Path
from typing import Dict, Mapping, Optional, Union

import numpy as np
import pandas as pd

from .calibration import ECE_BINS, reliability_deciles
from .engine import circuit_resources
from .experiments import mean_std, write_frames
from .graphs import Graph

logger = logging.getLogger(__name__)

BUDGET_BINS = 5


def runtime_bars(results: pd.DataFrame) -> pd.DataFrame:
    return mean_std(results, ["method"], ["wall_ms"])


def eval_bars(results: pd.DataFrame) -> pd.DataFrame:
    return mean_std(results, ["method"], ["evals"])


def speedup_vs_n(results: pd.DataFrame) -> pd.DataFrame:
    """
    Per size and method: wall-clock speedup over random restarts (medians) and
    the ratio of mean evaluation counts, which does not depend on timing.
    """
    rows = []
    for n, group in results.groupby("n", sort=True):
        wall = group.groupby("method", sort=False)["wall_ms"].median()
        evals = group.groupby("method", sort=False)["evals"].mean()
        for method in evals.index:
            ref_wall = wall.get("random", np.nan)
            rows.append(
                {
                    "n": n,
                    "method": method,
                    "speedup": ref_wall / wall[method] if wall[method] > 0 else np.nan,
                    "eval_speedup": evals.get("random", np.nan) / evals[method],
                }
            )
    return pd.DataFrame(rows, columns=["n", "method", "speedup", "eval_speedup"])


def _trust_region_runs(results: pd.DataFrame, allocations: pd.DataFrame) -> pd.DataFrame:
    runs = results.loc[results["method"] == "uq_qaoa", ["instance", "seed", "ratio"]]
    return allocations.merge(runs, on=["instance", "seed"], how="inner")


def reliability(results: pd.DataFrame, allocations: pd.DataFrame, bins: int = ECE_BINS) -> pd.DataFrame:
    """Decile table of scalar uncertainty against ``1 - r`` for the trust-region runs."""
    runs = _trust_region_runs(results, allocations)
    return reliability_deciles(runs["U"].to_numpy(), 1.0 - runs["ratio"].to_numpy(), bins)


def cumulative_evals(results: pd.DataFrame) -> pd.DataFrame:
    """Running evaluation totals per method in instance order; the last row of a method is its total."""
    out = results[["method", "instance", "evals"]].copy()
    out["step"] = out.groupby("method", sort=False).cumcount() + 1
    out["cumulative_evals"] = out.groupby("method", sort=False)["evals"].cumsum()
    out = out.sort_values(["method", "step"], kind="stable")
    return out[["method", "step", "instance", "evals", "cumulative_evals"]].reset_index(drop=True)


def budget_scatter(allocations: pd.DataFrame) -> pd.DataFrame:
    """One point per trust-region run with its allocated budget ``K + T``."""
    out = allocations.copy()
    out["budget"] = out["K"] + out["T"]
    return out


def budget_bins(allocations: pd.DataFrame, bins: int = BUDGET_BINS) -> pd.DataFrame:
    """
    Equal-mass bins of scalar uncertainty with mean allocation per bin.

    ``K`` and ``T`` are nondecreasing in ``U``, so the ``budget_mean`` column
    is nondecreasing across bins.
    """
    scatter = budget_scatter(allocations)
    order = np.argsort(scatter["U"].to_numpy(), kind="stable")
    rows = []
    for b, idx in enumerate(np.array_split(order, min(bins, len(order)))):
        part = scatter.iloc[idx]
        rows.append(
            {
                "bin": b + 1,
                "count": len(part),
                "u_mean": part["U"].mean(),
                "k_mean": part["K"].mean(),
                "t_mean": part["T"].mean(),
                "budget_mean": part["budget"].mean(),
                "evals_mean": part["evals"].mean(),
            }
        )
    return pd.DataFrame(rows, columns=["bin", "count", "u_mean", "k_mean", "t_mean", "budget_mean", "evals_mean"])


def gate_totals(results: pd.DataFrame, graphs: Mapping[str, Graph], p: int = 2) -> pd.DataFrame:
    """Total CNOT and rotation gates executed per method (evaluations times per-circuit counts)."""
    rows = []
    for method, group in results.groupby("method", sort=False):
        cnot = rotations = 0
        for instance, evals in zip(group["instance"], group["evals"]):
            gates = circuit_resources(graphs[instance], p)
            cnot += int(evals) * gates["cnot"]
            rotations += int(evals) * gates["rotations"]
        rows.append({"method": method, "evals": int(group["evals"].sum()), "cnot": cnot, "rotations": rotations})
    return pd.DataFrame(rows, columns=["method", "evals", "cnot", "rotations"])


def build_report(
    results_dir: Union[str, Path],
    figures_dir: Optional[Union[str, Path]] = None,
    graphs: Optional[Mapping[str, Graph]] = None,
    p: int = 2,
) -> Dict[str, pd.DataFrame]:
    """
    Derive every figure data file from ``results.csv`` and ``allocations.csv``.

    Parameters
    ----------
    results_dir : str or Path
        Directory written by the benchmark.
    figures_dir : str or Path, optional
        Where the files are written as ``<name>.csv``.
    graphs : mapping, optional
        Test graphs by instance id, needed for the gate totals.
    p : int, optional
        QAOA depth of the gate counts.

    Returns
    -------
    dict
        Frames by name.

    Raises
    ------
    FileNotFoundError
        If ``results.csv`` is missing.
    """
    results_path = Path(results_dir) / "results.csv"
    if not results_path.is_file():
        raise FileNotFoundError(f"Missing {results_path}; run 'qaoatrust evaluate' first")
    results = pd.read_csv(results_path)
    frames = {
        "runtime_bars": runtime_bars(results),
        "eval_bars": eval_bars(results),
        "speedup_vs_n": speedup_vs_n(results),
        "cumulative_evals": cumulative_evals(results),
    }
    allocations_path = Path(results_dir) / "allocations.csv"
    if allocations_path.is_file():
        allocations = pd.read_csv(allocations_path)
        frames["budget_scatter"] = budget_scatter(allocations)
        if len(allocations):
            frames["budget_bins"] = budget_bins(allocations)
        try:
            frames["reliability_deciles"] = reliability(results, allocations)
        except ValueError as exc:
            logger.warning("Skipping reliability deciles: %s", exc)
    if graphs is not None:
        frames["gate_totals"] = gate_totals(results, graphs, p)
    if figures_dir is not None:
        write_frames(frames, figures_dir)
    return frames
