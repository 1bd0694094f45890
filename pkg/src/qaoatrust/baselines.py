"""
Comparison methods. Every method runs through the same metered objective and
the same Nelder-Mead refinement path, with identical tolerances.
"""

import time
from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np

from .engine import EXACT, FINAL_MEASUREMENT_SHOTS, MeteredObjective, NoiseModel
from .graphs import Graph
from .predictor import GINModel
from .search import DEFAULT_T_BASE, RunResult, finish_run, refine
from .spectral import handcrafted
from .utils import make_rng

RANDOM_RESTARTS = 4
REFINE_ITERS = 60
HEURISTIC_JITTER = 0.05
TQA_DELTA = 0.75
KNN_NEIGHBORS = 5
DEPTH = 2


@dataclass(frozen=True)
class Method:
    """A registered optimization method."""

    name: str
    description: str


_METHODS: Dict[str, Method] = {
    "random": Method("random", f"{RANDOM_RESTARTS} uniform random restarts, {REFINE_ITERS} Nelder-Mead iterations each"),
    "heuristic": Method("heuristic", "Two restarts from the median training angles (parameter concentration)"),
    "knn": Method("knn", f"Mean angles of the {KNN_NEIGHBORS} nearest training graphs in feature space"),
    "tqa": Method("tqa", f"Linear annealing ramp with total time {TQA_DELTA}"),
    "gnn_point": Method("gnn_point", "Deterministic GIN mean, fixed budget 2 x T_base, unconstrained"),
    "uq_qaoa": Method("uq_qaoa", "Gaussian GIN trust region with uncertainty-driven budget"),
}


def get_method(name: str) -> Method:
    """
    Retrieve a method by name.

    Raises
    ------
    ValueError
        If the method name is not found.
    """
    try:
        return _METHODS[name]
    except KeyError:
        raise ValueError(f"Unknown method {name!r}. Available: {list(_METHODS)}") from None


def list_methods() -> Dict[str, str]:
    """Map method names to their descriptions."""
    return {k: v.description for k, v in _METHODS.items()}


def random_restarts(
    g: Graph,
    restarts: int = RANDOM_RESTARTS,
    iters: int = REFINE_ITERS,
    seed: int = 0,
    noise: NoiseModel = EXACT,
    p: int = DEPTH,
    instance: str = "",
    final_shots: int = FINAL_MEASUREMENT_SHOTS,
) -> RunResult:
    """Best of ``restarts`` unconstrained refinements from ``Uniform[-pi, pi]^{2p}`` starts."""
    if restarts < 1:
        raise ValueError(f"Need at least one restart, got {restarts}")
    started = time.perf_counter()
    rng = make_rng(seed, "random-starts")
    objective = MeteredObjective(g, noise=noise, seed=seed)
    for _ in range(restarts):
        refine(objective, rng.uniform(-np.pi, np.pi, size=2 * p), iters)
    return finish_run(objective, "random", instance, seed, started, final_shots)


def median_angles(training_targets: Sequence[np.ndarray]) -> np.ndarray:
    """Coordinatewise median of the training targets."""
    if len(training_targets) == 0:
        raise ValueError("Training targets are required")
    return np.median(np.stack([np.asarray(t, dtype=np.float64) for t in training_targets]), axis=0)


def concentration_heuristic(
    g: Graph,
    training_targets: Sequence[np.ndarray],
    seed: int = 0,
    iters: int = REFINE_ITERS,
    noise: NoiseModel = EXACT,
    instance: str = "",
    final_shots: int = FINAL_MEASUREMENT_SHOTS,
) -> RunResult:
    """Two refinements: from the median training angles and from the median shifted by +0.05."""
    started = time.perf_counter()
    theta0 = median_angles(training_targets)
    objective = MeteredObjective(g, noise=noise, seed=seed)
    refine(objective, theta0, iters)
    refine(objective, theta0 + HEURISTIC_JITTER, iters)
    return finish_run(objective, "heuristic", instance, seed, started, final_shots)


@dataclass
class KNNRegressor:
    """
    k-nearest-neighbour regressor over standardized handcrafted features.

    Features with zero training variance are dropped from the metric.
    """

    features: np.ndarray
    targets: np.ndarray
    mean: np.ndarray = field(init=False, repr=False)
    scale: np.ndarray = field(init=False, repr=False)
    keep: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        self.targets = np.atleast_2d(np.asarray(self.targets, dtype=np.float64))
        if len(self.features) != len(self.targets) or len(self.features) == 0:
            raise ValueError("Need the same positive number of feature rows and targets")
        self.mean = self.features.mean(axis=0)
        std = self.features.std(axis=0)
        self.keep = std > 0
        self.scale = np.where(self.keep, std, 1.0)

    @classmethod
    def from_graphs(cls, graphs: Sequence[Graph], targets: Sequence[np.ndarray]) -> "KNNRegressor":
        return cls(
            features=np.stack([handcrafted(g).as_array() for g in graphs]),
            targets=np.stack([np.asarray(t, dtype=np.float64) for t in targets]),
        )

    def _standardize(self, x: np.ndarray) -> np.ndarray:
        return ((x - self.mean) / self.scale)[..., self.keep]

    def predict(self, features: np.ndarray, k: int = KNN_NEIGHBORS) -> np.ndarray:
        """
        Mean target of the ``k`` nearest training rows (stable order on ties).

        Raises
        ------
        ValueError
            If ``k`` exceeds the training size.
        """
        if not 1 <= k <= len(self.features):
            raise ValueError(f"k must be in [1, {len(self.features)}], got {k}")
        train = self._standardize(self.features)
        query = self._standardize(np.asarray(features, dtype=np.float64))
        dist = np.linalg.norm(train - query, axis=1)
        nearest = np.argsort(dist, kind="stable")[:k]
        return self.targets[nearest].mean(axis=0)


def knn_predict(
    g: Graph,
    knn: KNNRegressor,
    k: int = KNN_NEIGHBORS,
    seed: int = 0,
    iters: int = REFINE_ITERS,
    noise: NoiseModel = EXACT,
    instance: str = "",
    final_shots: int = FINAL_MEASUREMENT_SHOTS,
) -> RunResult:
    """Refine once from the k-NN angle prediction."""
    started = time.perf_counter()
    theta0 = knn.predict(handcrafted(g).as_array(), k)
    objective = MeteredObjective(g, noise=noise, seed=seed)
    refine(objective, theta0, iters)
    return finish_run(objective, "knn", instance, seed, started, final_shots)


def tqa_init(p: int = DEPTH, delta: float = TQA_DELTA) -> np.ndarray:
    """Linear ramp ``gamma_l = (l/p) delta``, ``beta_l = (1 - l/p) delta``."""
    if p < 1:
        raise ValueError(f"p must be positive, got {p}")
    frac = np.arange(1, p + 1) / p
    return np.concatenate([frac * delta, (1.0 - frac) * delta])


def tqa(
    g: Graph,
    p: int = DEPTH,
    seed: int = 0,
    iters: int = REFINE_ITERS,
    noise: NoiseModel = EXACT,
    instance: str = "",
    final_shots: int = FINAL_MEASUREMENT_SHOTS,
) -> RunResult:
    """Refine once from the annealing-inspired schedule."""
    started = time.perf_counter()
    objective = MeteredObjective(g, noise=noise, seed=seed)
    refine(objective, tqa_init(p), iters)
    return finish_run(objective, "tqa", instance, seed, started, final_shots)


def gnn_point(
    g: Graph,
    model: GINModel,
    t_base: int = DEFAULT_T_BASE,
    seed: int = 0,
    noise: NoiseModel = EXACT,
    instance: str = "",
    final_shots: int = FINAL_MEASUREMENT_SHOTS,
) -> RunResult:
    """Refine once from the predicted mean for ``2 * t_base`` iterations, unconstrained."""
    started = time.perf_counter()
    objective = MeteredObjective(g, noise=noise, seed=seed)
    refine(objective, model.predict(g).mu, 2 * t_base)
    return finish_run(objective, "gnn_point", instance, seed, started, final_shots)
