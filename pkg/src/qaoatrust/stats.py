import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd
from scipy import stats

MIN_PAIRS = 10


@dataclass(frozen=True)
class WilcoxonResult:
    """
    Parameters
    ----------
    statistic : float
        ``min(W+, W-)``.
    z : float
        Standardized ``W+`` under the tie-corrected normal approximation.
    p_value : float
        Two-sided p-value.
    effect_size : float
        ``|z| / sqrt(n)``.
    n : int
        Pairs left after dropping zero differences.
    """

    statistic: float
    z: float
    p_value: float
    effect_size: float
    n: int


def wilcoxon_signed_rank(x: Sequence[float], y: Sequence[float]) -> WilcoxonResult:
    """
    Paired Wilcoxon signed-rank test on ``y - x`` (normal approximation).

    Zero differences are dropped and tied absolute differences get average
    ranks with the matching variance correction.

    Raises
    ------
    ValueError
        If the inputs differ in length or fewer than ten non-zero pairs remain.
    """
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("x and y must have the same length")
    diff = b - a
    diff = diff[diff != 0]
    n = diff.size
    if n < MIN_PAIRS:
        raise ValueError(f"Need at least {MIN_PAIRS} non-zero differences, got {n}")
    options = {"zero_method": "wilcox", "correction": False, "method": "approx"}
    two_sided = stats.wilcoxon(diff, **options)
    w_plus = float(stats.wilcoxon(diff, alternative="greater", **options).statistic)
    z = math.copysign(float(stats.norm.isf(two_sided.pvalue / 2.0)), w_plus - n * (n + 1) / 4.0)
    return WilcoxonResult(
        statistic=float(two_sided.statistic),
        z=z,
        p_value=float(two_sided.pvalue),
        effect_size=abs(z) / math.sqrt(n),
        n=n,
    )


_COMPARISONS = (
    ("uq_qaoa", "random", "evals"),
    ("uq_qaoa", "random", "wall_ms"),
    ("uq_qaoa", "gnn_point", "evals"),
    ("uq_qaoa", "heuristic", "evals"),
    ("uq_qaoa", "heuristic", "ratio"),
)


def significance_table(results: pd.DataFrame) -> pd.DataFrame:
    """
    Paired tests of ``uq_qaoa`` against the baselines, matched by instance.

    Comparisons without enough pairs get NaN statistics.
    """
    rows = []
    for method, baseline, metric in _COMPARISONS:
        left = results[results["method"] == method].set_index(["instance", "seed"])[metric]
        right = results[results["method"] == baseline].set_index(["instance", "seed"])[metric]
        paired = pd.concat([left, right], axis=1, keys=["method", "baseline"], join="inner")
        row = {"method": method, "baseline": baseline, "metric": metric, "pairs": len(paired)}
        try:
            res = wilcoxon_signed_rank(paired["method"].to_numpy(), paired["baseline"].to_numpy())
            row.update(statistic=res.statistic, z=res.z, p_value=res.p_value, effect_size=res.effect_size)
        except ValueError:
            row.update(statistic=np.nan, z=np.nan, p_value=np.nan, effect_size=np.nan)
        rows.append(row)
    return pd.DataFrame(rows)
