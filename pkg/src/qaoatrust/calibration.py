"""Scalar uncertainty, normalization constants, conformal radii and calibration metrics."""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd
from scipy import stats

from .predictor import GaussianPrediction
from .trust import chi2_quantile

logger = logging.getLogger(__name__)

ECE_BINS = 10


@dataclass(frozen=True)
class CalibrationConstants:
    """
    Validation statistics used at inference.

    Parameters
    ----------
    u_med : float
        Median scalar uncertainty.
    u_iqr : float
        Interquartile range of the scalar uncertainty (type-7 quartiles).
    conformal_scores : tuple of float
        Sorted Mahalanobis nonconformity scores of the validation targets.
    """

    u_med: float
    u_iqr: float
    conformal_scores: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.u_iqr > 0:
            raise ValueError(f"U_iqr must be positive, got {self.u_iqr}")
        scores = np.asarray(self.conformal_scores, dtype=np.float64)
        if np.any(scores < 0) or np.any(np.diff(scores) < 0):
            raise ValueError("Conformal scores must be non-negative and sorted ascending")

    def to_text(self) -> str:
        scores = ",".join(repr(float(s)) for s in self.conformal_scores)
        return f"u_med = {self.u_med!r}\nu_iqr = {self.u_iqr!r}\nconformal_scores = {scores}\n"

    @classmethod
    def from_text(cls, text: str) -> "CalibrationConstants":
        values = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"Malformed calibration line: {line!r}")
            values[key.strip()] = value.strip()
        try:
            raw = values["conformal_scores"]
            scores = tuple(float(s) for s in raw.split(",")) if raw else ()
            return cls(u_med=float(values["u_med"]), u_iqr=float(values["u_iqr"]), conformal_scores=scores)
        except KeyError as exc:
            raise ValueError(f"Missing calibration key {exc.args[0]!r}") from None

    def dump(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CalibrationConstants":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def scalar_uncertainty(pred: GaussianPrediction) -> float:
    """Mean predicted variance, ``tr(Sigma) / 2p``."""
    return float(np.mean(pred.var))


def conformal_score(pred: GaussianPrediction, target: np.ndarray) -> float:
    """Mahalanobis score of a target under a prediction."""
    diff = np.asarray(target, dtype=np.float64) - pred.mu
    return float(np.sum(diff**2 / pred.var))


def fit_constants(
    predictions: Sequence[GaussianPrediction], targets: Sequence[np.ndarray]
) -> CalibrationConstants:
    """
    Fit normalization constants and conformal scores on a validation set.

    Parameters
    ----------
    predictions : sequence of GaussianPrediction
    targets : sequence of np.ndarray
        Reference angles in the same order.

    Returns
    -------
    CalibrationConstants

    Raises
    ------
    ValueError
        With fewer than two items, mismatched lengths or a zero IQR.
    """
    if len(predictions) != len(targets):
        raise ValueError(f"Got {len(predictions)} predictions and {len(targets)} targets")
    if len(predictions) < 2:
        raise ValueError("Need at least two validation items")
    u = np.array([scalar_uncertainty(pred) for pred in predictions])
    q1, med, q3 = np.percentile(u, [25, 50, 75])
    iqr = float(q3 - q1)
    if iqr <= 0:
        raise ValueError("Degenerate validation uncertainties: IQR is zero")
    scores = sorted(conformal_score(pred, t) for pred, t in zip(predictions, targets))
    return CalibrationConstants(u_med=float(med), u_iqr=iqr, conformal_scores=tuple(scores))


def conformal_rank(m: int, alpha: float) -> int:
    """Order-statistic index ``ceil((M + 1)(1 - alpha))``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    # guard against products like 10 * 0.9 landing just above an integer
    return math.ceil((m + 1) * (1.0 - alpha) - 1e-9)


def conformal_quantile(
    constants: Union[CalibrationConstants, Sequence[float]], alpha: float
) -> float:
    """
    Split-conformal radius ``q_hat_{1-alpha}``.

    Parameters
    ----------
    constants : CalibrationConstants or sequence of float
        Calibration scores.
    alpha : float
        Miscoverage level.

    Returns
    -------
    float
        The ``k``-th smallest score, ``k = ceil((M + 1)(1 - alpha))``.

    Raises
    ------
    ValueError
        If ``M`` is too small for the requested level.
    """
    raw = constants.conformal_scores if isinstance(constants, CalibrationConstants) else constants
    scores = np.sort(np.asarray(raw, dtype=np.float64))
    k = conformal_rank(scores.size, alpha)
    if k > scores.size:
        raise ValueError(
            f"{scores.size} calibration scores are too few for alpha={alpha} "
            f"(need at least {math.ceil(1 / alpha - 1)})"
        )
    return float(scores[max(k, 1) - 1])


def coverage(scores: Sequence[float], q: float) -> float:
    """Fraction of scores inside radius ``q``."""
    arr = np.asarray(scores, dtype=np.float64)
    return float(np.mean(arr <= q))


def _min_max(x: np.ndarray) -> np.ndarray:
    span = x.max() - x.min()
    if span == 0:
        return np.zeros_like(x)
    return (x - x.min()) / span


def reliability_deciles(
    uncertainties: Sequence[float], errors: Sequence[float], bins: int = ECE_BINS
) -> pd.DataFrame:
    """
    Equal-mass bins of min-max normalized uncertainty against normalized error.

    Returns
    -------
    pd.DataFrame
        Columns ``bin, count, mean_predicted, mean_observed``; one row per bin.
    """
    pred = np.asarray(uncertainties, dtype=np.float64)
    obs = np.asarray(errors, dtype=np.float64)
    if pred.shape != obs.shape:
        raise ValueError("uncertainties and errors must have the same length")
    if bins < 2:
        raise ValueError(f"Need at least two bins, got {bins}")
    if pred.size < bins:
        raise ValueError(f"Need at least {bins} items for {bins} bins, got {pred.size}")
    pred, obs = _min_max(pred), _min_max(obs)
    order = np.argsort(pred, kind="stable")
    rows = []
    for b, idx in enumerate(np.array_split(order, bins)):
        rows.append(
            {
                "bin": b + 1,
                "count": int(idx.size),
                "mean_predicted": float(pred[idx].mean()),
                "mean_observed": float(obs[idx].mean()),
            }
        )
    return pd.DataFrame(rows)


def ece(uncertainties: Sequence[float], errors: Sequence[float], bins: int = ECE_BINS) -> float:
    """
    Expected calibration error between normalized uncertainty and normalized error.

    Bin gaps ``|mean predicted - mean observed|`` are weighted by bin mass.
    """
    table = reliability_deciles(uncertainties, errors, bins)
    weights = table["count"] / table["count"].sum()
    return float((weights * (table["mean_predicted"] - table["mean_observed"]).abs()).sum())


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """
    Spearman rank correlation with average ranks for ties.

    Raises
    ------
    ValueError
        With fewer than three pairs, mismatched lengths or a constant input.
    """
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("x and y must have the same length")
    if a.size < 3:
        raise ValueError(f"Need at least three pairs, got {a.size}")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise ValueError("Spearman correlation is undefined for constant input")
    return float(stats.spearmanr(a, b).statistic)


def calibration_report(
    predictions: Sequence[GaussianPrediction],
    targets: Sequence[np.ndarray],
    constants: CalibrationConstants,
    levels: Sequence[float] = (0.90, 0.95),
) -> pd.DataFrame:
    """
    Summary of a calibration pass: normalization constants and, per coverage
    level, the chi-square and conformal radii with their empirical coverage.

    Levels the calibration set is too small for get NaN conformal entries.

    Returns
    -------
    pd.DataFrame
        Columns ``quantity, value``.
    """
    scores = [conformal_score(pred, t) for pred, t in zip(predictions, targets)]
    dof = predictions[0].mu.size
    rows = [("n", float(len(scores))), ("u_med", constants.u_med), ("u_iqr", constants.u_iqr)]
    for level in levels:
        q_chi2 = chi2_quantile(dof, level)
        rows.append((f"q_chi2_{level:.2f}", q_chi2))
        rows.append((f"coverage_chi2_{level:.2f}", coverage(scores, q_chi2)))
        try:
            q_conf = conformal_quantile(constants, 1.0 - level)
            cov_conf = coverage(scores, q_conf)
        except ValueError as exc:
            logger.warning("Skipping conformal level %.2f: %s", level, exc)
            q_conf = cov_conf = math.nan
        rows.append((f"q_conformal_{level:.2f}", q_conf))
        rows.append((f"coverage_conformal_{level:.2f}", cov_conf))
    return pd.DataFrame(rows, columns=["quantity", "value"])
