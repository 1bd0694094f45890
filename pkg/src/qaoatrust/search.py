"""Run records, the shared refinement path and trust-region inference."""

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .calibration import CalibrationConstants, scalar_uncertainty
from .engine import EXACT, FINAL_MEASUREMENT_SHOTS, MeteredObjective, NoiseModel
from .graphs import Graph
from .neldermead import INITIAL_STEP, nelder_mead
from .predictor import GaussianPrediction, GINModel
from .trust import BudgetAllocation, TrustRegion, allocate_budget
from .utils import derive_seed, make_rng

logger = logging.getLogger(__name__)

DEFAULT_T_BASE = 30
REGION_STEP_FRACTION = 0.05

RESULT_COLUMNS = ("instance", "family", "n", "method", "seed", "evals", "best_f", "ratio", "wall_ms")


@dataclass
class RunResult:
    """
    Outcome of one optimization run on one instance.

    ``evals`` always equals ``len(trace)`` and ``best_f`` the largest value in
    the trace. The final measurement used for ``ratio`` in exact mode is not
    an evaluation.
    """

    instance: str
    method: str
    seed: int
    graph: Graph = field(repr=False)
    best_theta: np.ndarray
    best_f: float
    ratio: float
    wall_ms: float
    trace: list[tuple[np.ndarray, float]] = field(repr=False)
    allocation: Optional[BudgetAllocation] = None
    uncertainty: Optional[float] = None

    @property
    def evals(self) -> int:
        return len(self.trace)

    def as_row(self, timing: bool = True) -> dict:
        return {
            "instance": self.instance,
            "family": self.graph.family.value if self.graph.family is not None else "-",
            "n": self.graph.n,
            "method": self.method,
            "seed": self.seed,
            "evals": self.evals,
            "best_f": self.best_f,
            "ratio": self.ratio,
            "wall_ms": self.wall_ms if timing else 0.0,
        }


def finish_run(
    objective: MeteredObjective,
    method: str,
    instance: str,
    seed: int,
    started: float,
    final_shots: int = FINAL_MEASUREMENT_SHOTS,
    allocation: Optional[BudgetAllocation] = None,
    uncertainty: Optional[float] = None,
) -> RunResult:
    """Close a run: pick the best evaluation and take the final measurement."""
    best_theta, best_f = objective.best()
    ratio = objective.sampled_ratio(best_theta, final_shots)
    return RunResult(
        instance=instance,
        method=method,
        seed=seed,
        graph=objective.graph,
        best_theta=best_theta.copy(),
        best_f=best_f,
        ratio=ratio,
        wall_ms=(time.perf_counter() - started) * 1000.0,
        trace=list(objective.trace),
        allocation=allocation,
        uncertainty=uncertainty,
    )


def refine(
    objective: MeteredObjective,
    theta0: np.ndarray,
    iters: int,
    region: Optional[TrustRegion] = None,
    step: Optional[np.ndarray] = None,
    initial_value: Optional[float] = None,
) -> np.ndarray:
    """
    Shared Nelder-Mead refinement used by every method.

    With a region, each vertex is projected and the default simplex steps are
    ``0.05 * sigma``; otherwise the search is unconstrained with steps 0.1.

    Returns
    -------
    np.ndarray
        Best point found by this refinement.
    """
    if step is None:
        step = INITIAL_STEP if region is None else REGION_STEP_FRACTION * region.sigma
    result = nelder_mead(
        objective,
        theta0,
        iters,
        projector=region.project if region is not None else None,
        initial_step=step,
        initial_value=initial_value,
    )
    return result.x


def uq_qaoa_infer(
    g: Graph,
    model: GINModel,
    calibration: CalibrationConstants,
    t_base: int = DEFAULT_T_BASE,
    alpha: float = 0.95,
    q: Optional[float] = None,
    seed: int = 0,
    noise: NoiseModel = EXACT,
    instance: str = "",
    use_trust_region: bool = True,
    final_shots: int = FINAL_MEASUREMENT_SHOTS,
    prediction: Optional[GaussianPrediction] = None,
) -> RunResult:
    """
    Predict, allocate, seed and refine inside the trust region.

    Parameters
    ----------
    g : Graph
    model : GINModel
        Trained Gaussian predictor.
    calibration : CalibrationConstants
        ``U_med``/``U_iqr`` for the budget allocator.
    t_base : int, optional
        Base iteration budget.
    alpha : float, optional
        Chi-square coverage of the region.
    q : float, optional
        Explicit squared radius, e.g. a conformal quantile; overrides ``alpha``.
    seed : int, optional
        Seed of the truncated samples and of all measurements.
    noise : NoiseModel, optional
        Applied uniformly to every evaluation, seeds included.
    instance : str, optional
        Identifier stored in the result.
    use_trust_region : bool, optional
        When false, seeds come from the untruncated Gaussian and refinement is
        not projected; the adaptive budget is kept.
    final_shots : int, optional
        Shots of the final measurement in exact mode.
    prediction : GaussianPrediction, optional
        Precomputed model output for ``g``.

    Returns
    -------
    RunResult
    """
    started = time.perf_counter()
    pred = prediction if prediction is not None else model.predict(g)
    u = scalar_uncertainty(pred)
    allocation = allocate_budget(u, calibration.u_med, calibration.u_iqr, t_base)
    region = TrustRegion.from_gaussian(pred.mu, pred.var, alpha=alpha, q=q)

    sample_seed = derive_seed(seed, "seeds")
    if use_trust_region:
        seeds = region.sample(allocation.k, sample_seed)
    else:
        rng = make_rng(sample_seed, "untruncated")
        seeds = [pred.mu + pred.std * rng.standard_normal(pred.mu.size) for _ in range(allocation.k)]

    objective = MeteredObjective(g, noise=noise, seed=seed)
    values = [objective(theta) for theta in seeds]
    start = int(np.argmax(values))
    refine(
        objective,
        seeds[start],
        allocation.t,
        region=region if use_trust_region else None,
        step=REGION_STEP_FRACTION * pred.std,
        initial_value=values[start],
    )
    logger.debug(
        "%s U=%.4f z=%.3f K=%d T=%d evals=%d", instance, u, allocation.z, allocation.k, allocation.t, objective.evals
    )
    return finish_run(
        objective,
        "uq_qaoa",
        instance,
        seed,
        started,
        final_shots=final_shots,
        allocation=allocation,
        uncertainty=u,
    )
