"""Mahalanobis trust regions and uncertainty-driven budget allocation."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .utils import make_rng, sigmoid

BISECTION_TOL = 1e-12
BOUNDARY_RTOL = 1e-9
MAX_SAMPLES = 5


class SamplingError(RuntimeError):
    """Raised when truncated sampling exceeds its draw cap."""


def chi2_cdf(x: float, dof: int) -> float:
    """
    Chi-square CDF.

    Even degrees of freedom use the closed form
    ``1 - exp(-x/2) sum_{i < dof/2} (x/2)^i / i!``; odd ones use the
    regularized lower incomplete gamma function.
    """
    if x <= 0:
        return 0.0
    if dof % 2 == 0:
        half = x / 2.0
        term, total = 1.0, 1.0
        for i in range(1, dof // 2):
            term *= half / i
            total += term
        return 1.0 - math.exp(-half) * total
    return float(special.gammainc(dof / 2.0, x / 2.0))


def chi2_quantile(dof: int, alpha: float) -> float:
    """
    Alpha-quantile of the chi-square distribution by bisection.

    Parameters
    ----------
    dof : int
        Degrees of freedom, at least 1.
    alpha : float
        Probability in (0, 1).

    Returns
    -------
    float

    Raises
    ------
    ValueError
        If ``alpha`` is outside (0, 1) or ``dof < 1``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if dof < 1:
        raise ValueError(f"dof must be at least 1, got {dof}")
    lo, hi = 0.0, float(dof)
    while chi2_cdf(hi, dof) < alpha:
        hi *= 2.0
    for _ in range(500):
        mid = 0.5 * (lo + hi)
        if chi2_cdf(mid, dof) < alpha:
            lo = mid
        else:
            hi = mid
        if hi - lo < BISECTION_TOL * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class TrustRegion:
    """
    Axis-aligned Mahalanobis ellipsoid ``{theta : sum((theta - mu)^2 / sigma^2) <= q}``.

    Parameters
    ----------
    center : np.ndarray
        Predicted mean ``mu``.
    inv_scale : np.ndarray
        Per-axis ``1 / sigma``.
    q : float
        Squared Mahalanobis radius.
    """

    center: np.ndarray
    inv_scale: np.ndarray
    q: float

    def __post_init__(self) -> None:
        if self.q <= 0:
            raise ValueError(f"Squared radius must be positive, got {self.q}")
        if self.center.shape != self.inv_scale.shape:
            raise ValueError("center and inv_scale must have the same shape")
        if np.any(self.inv_scale <= 0) or not np.all(np.isfinite(self.inv_scale)):
            raise ValueError("inv_scale must be positive and finite")

    @classmethod
    def from_gaussian(
        cls,
        mu: np.ndarray,
        var: np.ndarray,
        alpha: float = 0.95,
        q: Optional[float] = None,
    ) -> "TrustRegion":
        """
        Region of a diagonal Gaussian.

        Parameters
        ----------
        mu, var : np.ndarray
            Mean and per-axis variances.
        alpha : float, optional
            Coverage level used for ``q = chi2_{dim}(alpha)``.
        q : float, optional
            Explicit squared radius (e.g. a conformal quantile); overrides
            ``alpha``.
        """
        mu = np.asarray(mu, dtype=np.float64)
        var = np.asarray(var, dtype=np.float64)
        radius_sq = chi2_quantile(mu.size, alpha) if q is None else float(q)
        return cls(center=mu.copy(), inv_scale=1.0 / np.sqrt(var), q=radius_sq)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def sigma(self) -> np.ndarray:
        return 1.0 / self.inv_scale

    @property
    def coverage(self) -> float:
        """Gaussian mass inside the region."""
        return chi2_cdf(self.q, self.dim)

    def mahalanobis_sq(self, theta: np.ndarray) -> float:
        z = (np.asarray(theta, dtype=np.float64) - self.center) * self.inv_scale
        return float(np.dot(z, z))

    def contains(self, theta: np.ndarray) -> bool:
        return self.mahalanobis_sq(theta) <= self.q * (1.0 + BOUNDARY_RTOL)

    def project(self, theta: np.ndarray) -> np.ndarray:
        """Radial projection onto the ellipsoid; points inside are returned unchanged."""
        theta = np.asarray(theta, dtype=np.float64)
        if self.contains(theta):
            return theta.copy()
        offset = theta - self.center
        scale = math.sqrt(self.q) / math.sqrt(self.mahalanobis_sq(theta))
        return self.center + scale * offset

    def sample(self, count: int, seed: int) -> list[np.ndarray]:
        """
        Rejection-sample the Gaussian truncated to the region.

        Raises
        ------
        SamplingError
            If fewer than ``count`` points are accepted within
            ``10 * count / coverage`` draws.
        """
        if count < 1:
            raise ValueError(f"count must be positive, got {count}")
        rng = make_rng(seed, "truncated")
        max_draws = math.ceil(10 * count / max(self.coverage, 1e-12))
        accepted: list[np.ndarray] = []
        drawn = 0
        while len(accepted) < count and drawn < max_draws:
            batch = min(max(2 * count, 16), max_draws - drawn)
            points = self.center + self.sigma * rng.standard_normal((batch, self.dim))
            drawn += batch
            for point in points:
                if self.contains(point):
                    accepted.append(point)
                    if len(accepted) == count:
                        break
        if len(accepted) < count:
            raise SamplingError(
                f"Accepted {len(accepted)} of {count} samples after {drawn} draws"
            )
        return accepted

    def sample_uniform(self, count: int, seed: int) -> np.ndarray:
        """Uniform draws from the ellipsoid volume."""
        rng = make_rng(seed, "uniform")
        directions = rng.standard_normal((count, self.dim))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        radii = rng.random(count) ** (1.0 / self.dim)
        return self.center + math.sqrt(self.q) * self.sigma * directions * radii[:, None]


@dataclass(frozen=True)
class BudgetAllocation:
    """
    Per-instance query budget.

    Parameters
    ----------
    k : int
        Number of truncated-Gaussian seeds, in [1, 5].
    t : int
        Nelder-Mead iterations, in [5, 2 * t_base].
    z : float
        Normalized uncertainty the allocation was computed from.
    """

    k: int
    t: int
    z: float


def allocate_budget(u: float, u_med: float, u_iqr: float, t_base: int) -> BudgetAllocation:
    """
    Map scalar uncertainty to a seed count and an iteration budget.

    ``z = (U - U_med) / U_iqr``, ``K = clamp(floor(1 + 4 sigmoid(z)), 1, 5)``,
    ``T = clamp(floor(T_base (0.5 + max(z, 0))), 5, 2 T_base)``.

    Raises
    ------
    ValueError
        If ``u_iqr <= 0`` or ``t_base < 3``.
    """
    if u_iqr <= 0:
        raise ValueError(f"U_iqr must be positive, got {u_iqr}")
    if t_base < 3:
        raise ValueError(f"T_base must be at least 3, got {t_base}")
    z = (u - u_med) / u_iqr
    k = min(max(math.floor(1 + 4 * sigmoid(z)), 1), MAX_SAMPLES)
    t = min(max(math.floor(t_base * (0.5 + max(z, 0.0))), 5), 2 * t_base)
    return BudgetAllocation(k=int(k), t=int(t), z=float(z))
