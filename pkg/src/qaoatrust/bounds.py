"""
Plug-in evaluation of the landscape, budget, noise and generalization bounds,
plus Monte-Carlo checks that check the local versions on real instances.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import special

from .engine import expectation, finite_diff_gradient, finite_diff_hessian
from .graphs import Graph
from .trust import TrustRegion, chi2_quantile
from .utils import make_rng


@dataclass(frozen=True)
class BoundInputs:
    """
    Constants the bounds are instantiated with.

    Parameters
    ----------
    m, p : int
        Edge count and QAOA depth.
    alpha : float
        Trust-region coverage.
    sigma : tuple of float
        Per-axis standard deviations (length ``2p``).
    r_star : float
        Approximation ratio of the predicted mean.
    epsilon : float
        Per-layer depolarizing strength.
    k : int
        Number of trust-region seeds.
    c_max : float, optional
        Optimal cut; defaults to ``m`` for the noisy and confinement rows.
    b_x, spectral_norm, layers, width, loss_bound, n_train, delta : float
        Generalization constants: input norm, per-layer spectral norm, depth,
        width, loss bound, training size and confidence.
    accuracy : float
        Target generalization gap of the sample-complexity row.
    """

    m: int = 21
    p: int = 2
    alpha: float = 0.95
    sigma: tuple[float, ...] = (0.15, 0.15, 0.15, 0.15)
    r_star: float = 0.851
    epsilon: float = 0.01
    k: int = 3
    c_max: Optional[float] = None
    b_x: float = 2.1
    spectral_norm: float = 1.5
    layers: int = 3
    width: int = 64
    loss_bound: float = 8.1
    n_train: int = 240
    delta: float = 0.05
    accuracy: float = 1.0

    def __post_init__(self) -> None:
        if len(self.sigma) != 2 * self.p:
            raise ValueError(f"Need {2 * self.p} sigma values, got {len(self.sigma)}")
        positive = {
            "m": self.m, "p": self.p, "k": self.k, "b_x": self.b_x, "spectral_norm": self.spectral_norm,
            "layers": self.layers, "width": self.width, "loss_bound": self.loss_bound,
            "n_train": self.n_train, "accuracy": self.accuracy,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if any(s <= 0 for s in self.sigma):
            raise ValueError("sigma values must be positive")
        if not 0.0 < self.delta < 1.0 or not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("delta must be in (0, 1) and epsilon in [0, 1]")

    @property
    def q(self) -> float:
        return chi2_quantile(2 * self.p, self.alpha)

    @property
    def cut_max(self) -> float:
        return float(self.m if self.c_max is None else self.c_max)


def lipschitz_bound(m: int, p: int) -> float:
    """Global gradient bound ``L_G = 2 m sqrt(2p)``."""
    return 2.0 * m * math.sqrt(2.0 * p)


def landscape_slack(lipschitz: float, q: float, sigma: Sequence[float]) -> float:
    """Worst-case loss ``L sqrt(q max sigma^2)`` of any point in the region against the centre."""
    return lipschitz * math.sqrt(q * max(s * s for s in sigma))


def output_guarantee(lipschitz: float, q: float, sigma: Sequence[float]) -> float:
    """Largest objective gap between two points of the region, ``2 L sqrt(q ||Sigma||)``."""
    return 2.0 * landscape_slack(lipschitz, q, sigma)


def best_of_k_gap(lipschitz: float, sigma: Sequence[float], k: int) -> float:
    """Expected shortfall of the best of ``k`` Gaussian seeds, ``L sqrt(tr Sigma) / sqrt(K)``."""
    return lipschitz * math.sqrt(sum(s * s for s in sigma)) / math.sqrt(k)


def volume_ratio(sigma: Sequence[float], alpha: float, p: int) -> float:
    """Volume of the region relative to the ``[-pi, pi]^{2p}`` box."""
    q = chi2_quantile(2 * p, alpha)
    return math.pi**p * q**p / (special.gamma(p + 1) * (2 * math.pi) ** (2 * p)) * float(np.prod(sigma))


def noise_nu(epsilon: float, p: int) -> float:
    return 1.0 - (1.0 - epsilon) ** (2 * p)


def noisy_bound(inputs: BoundInputs) -> tuple[float, float]:
    """
    Noisy landscape bound as ``(coefficient of C_max, constant offset)``.

    ``F_noisy >= (1 - nu)(r* C_max - slack) + nu m / 2``.
    """
    nu = noise_nu(inputs.epsilon, inputs.p)
    slack = landscape_slack(lipschitz_bound(inputs.m, inputs.p), inputs.q, inputs.sigma)
    return (1.0 - nu) * inputs.r_star, -(1.0 - nu) * slack + nu * inputs.m / 2.0


def rademacher_term(inputs: BoundInputs) -> float:
    """Plug-in ``B_x prod(s) sqrt(2 L log(2d)) / sqrt(N)`` complexity of the network class."""
    prod = inputs.spectral_norm**inputs.layers
    return inputs.b_x * prod * math.sqrt(2.0 * inputs.layers * math.log(2 * inputs.width)) / math.sqrt(inputs.n_train)


def generalization_gap(inputs: BoundInputs) -> float:
    """``2 R_N + 3 M sqrt(log(2/delta) / 2N)``."""
    concentration = 3.0 * inputs.loss_bound * math.sqrt(math.log(2.0 / inputs.delta) / (2.0 * inputs.n_train))
    return 2.0 * rademacher_term(inputs) + concentration


def sample_complexity(inputs: BoundInputs) -> int:
    """Training-set size that makes both generalization terms at most ``accuracy / 2``."""
    prod = inputs.spectral_norm**inputs.layers
    eps2 = inputs.accuracy**2
    complexity = 128.0 * inputs.b_x**2 * prod**2 * inputs.layers * math.log(2 * inputs.width) / eps2
    confidence = 18.0 * inputs.loss_bound**2 * math.log(2.0 / inputs.delta) / eps2
    return math.ceil(max(complexity, confidence))


def variance_confinement_threshold(r_star: float, c_max: float, lipschitz: float, q: float) -> float:
    """Largest ``sigma^2_max`` for which the landscape bound stays above ``r* C_max / 2``."""
    return (r_star * c_max) ** 2 / (4.0 * lipschitz**2 * q)


def anticoncentration_floor(kappa: float, sigma_min: float, q: float, p: int) -> float:
    """Lower bound ``kappa^2 sigma_min^2 q / (2p + 2)`` on the gradient variance over the region."""
    return kappa**2 * sigma_min**2 * q / (2 * p + 2)


def bound_table(inputs: BoundInputs = BoundInputs()) -> pd.DataFrame:
    """
    Every plug-in bound for one set of constants.

    Returns
    -------
    pd.DataFrame
        Columns ``quantity, value, expression``.
    """
    lip = lipschitz_bound(inputs.m, inputs.p)
    q = inputs.q
    sigma = inputs.sigma
    coef, offset = noisy_bound(inputs)
    sigma2_max = max(s * s for s in sigma)
    rows = [
        ("chi2_quantile", q, f"chi2_{2 * inputs.p}({inputs.alpha})"),
        ("lipschitz", lip, "2 m sqrt(2p)"),
        ("landscape_slack", landscape_slack(lip, q, sigma), "L sqrt(q max sigma^2)"),
        ("landscape_ratio_coefficient", inputs.r_star, "F >= r* C_max - slack"),
        ("output_guarantee", output_guarantee(lip, q, sigma), "2 L sqrt(q max sigma^2)"),
        ("best_of_k_gap", best_of_k_gap(lip, sigma, inputs.k), "L sqrt(tr Sigma) / sqrt(K)"),
        ("volume_ratio", volume_ratio(sigma, inputs.alpha, inputs.p), "vol(T) / (2 pi)^(2p)"),
        ("noise_nu", noise_nu(inputs.epsilon, inputs.p), "1 - (1 - eps)^(2p)"),
        ("noisy_bound_coefficient", coef, "(1 - nu) r*"),
        ("noisy_bound_offset", offset, "-(1 - nu) slack + nu m / 2"),
        ("variance_confinement", variance_confinement_threshold(inputs.r_star, inputs.cut_max, lip, q), "(r* C_max)^2 / (4 L^2 q)"),
        ("sigma2_max", sigma2_max, "max sigma^2"),
        ("rademacher", rademacher_term(inputs), "B_x prod(s) sqrt(2 L log 2d) / sqrt(N)"),
        ("generalization_gap", generalization_gap(inputs), "2 R_N + 3 M sqrt(log(2/delta) / 2N)"),
        ("sample_complexity", float(sample_complexity(inputs)), "N for gap <= accuracy"),
    ]
    return pd.DataFrame(rows, columns=["quantity", "value", "expression"])


def max_gradient_norm(g: Graph, points: np.ndarray) -> float:
    """Largest finite-difference gradient norm over ``points``."""
    return max(float(np.linalg.norm(finite_diff_gradient(g, x))) for x in points)


def landscape_check(g: Graph, region: TrustRegion, draws: int = 100, seed: int = 0) -> dict:
    """
    Compare the worst objective over uniform region draws with the local bound.

    Returns
    -------
    dict
        ``min_f``, ``bound`` (``F(mu) - L_hat sqrt(q max sigma^2)``),
        ``lipschitz_hat`` and ``holds``.
    """
    points = region.sample_uniform(draws, seed)
    values = np.array([expectation(g, x) for x in points])
    lip_hat = max_gradient_norm(g, points)
    bound = expectation(g, region.center) - landscape_slack(lip_hat, region.q, region.sigma)
    return {"min_f": float(values.min()), "bound": bound, "lipschitz_hat": lip_hat, "holds": bool(values.min() >= bound)}


def best_of_k_check(
    g: Graph,
    region: TrustRegion,
    k: int,
    repetitions: int = 200,
    seed: int = 0,
    lipschitz_draws: int = 50,
) -> dict:
    """
    Monte-Carlo estimate of ``E[max_k F(theta_k)]`` for untruncated Gaussian seeds
    against ``F(mu) - L_hat sqrt(tr Sigma) / sqrt(K)``.
    """
    rng = make_rng(seed, "best-of-k")
    sigma = region.sigma
    best = []
    for _ in range(repetitions):
        draws = region.center + sigma * rng.standard_normal((k, region.dim))
        best.append(max(expectation(g, x) for x in draws))
    lip_hat = max_gradient_norm(g, region.sample_uniform(lipschitz_draws, seed))
    bound = expectation(g, region.center) - best_of_k_gap(lip_hat, sigma, k)
    mean_best = float(np.mean(best))
    return {"mean_best": mean_best, "bound": bound, "lipschitz_hat": lip_hat, "holds": bool(mean_best >= bound)}


def anticoncentration_check(g: Graph, region: TrustRegion, draws: int = 2000, seed: int = 0) -> dict:
    """
    Gradient variance over uniform region draws against the leading-order
    curvature floor (third-order remainder terms are not estimated).

    Only meaningful when the Hessian at the centre is negative definite
    (``kappa > 0``); ``holds`` is ``None`` otherwise.
    """
    hessian = finite_diff_hessian(g, region.center)
    kappa = float(np.linalg.eigvalsh(-hessian).min())
    points = region.sample_uniform(draws, seed)
    grads = np.stack([finite_diff_gradient(g, x) for x in points])
    variances = grads.var(axis=0, ddof=1)
    p = region.dim // 2
    floor = anticoncentration_floor(max(kappa, 0.0), float(region.sigma.min()), region.q, p)
    return {
        "kappa": kappa,
        "min_variance": float(variances.min()),
        "floor": floor,
        "holds": bool(variances.min() >= floor) if kappa > 0 else None,
    }
