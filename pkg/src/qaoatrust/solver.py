from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .calibration import CalibrationConstants, conformal_quantile, scalar_uncertainty
from .checkpoint import load_checkpoint
from .engine import EXACT, FINAL_MEASUREMENT_SHOTS, NoiseModel
from .graphs import Graph
from .predictor import GaussianPrediction, GINModel
from .search import DEFAULT_T_BASE, RunResult, uq_qaoa_infer
from .trust import BudgetAllocation, TrustRegion, allocate_budget


@dataclass
class TrustRegionSolver:
    """
    Main interface for predicting angle distributions and solving instances.

    Parameters
    ----------
    model : GINModel
        Trained Gaussian predictor.
    calibration : CalibrationConstants
        Validation constants of the model.
    t_base : int, optional
        Base Nelder-Mead iteration budget.
    alpha : float, optional
        Target coverage of the trust region.
    conformal : bool, optional
        Use the conformal radius ``q_hat_{alpha}`` instead of the chi-square
        quantile.
    noise : NoiseModel, optional
        Noise applied to every objective evaluation.
    final_shots : int, optional
        Shots of the final measurement in exact mode.
    """

    model: GINModel
    calibration: CalibrationConstants
    t_base: int = DEFAULT_T_BASE
    alpha: float = 0.95
    conformal: bool = False
    noise: NoiseModel = EXACT
    final_shots: int = FINAL_MEASUREMENT_SHOTS
    use_trust_region: bool = True
    q: Optional[float] = field(default=None, init=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.conformal:
            self.q = conformal_quantile(self.calibration, 1.0 - self.alpha)

    @classmethod
    def from_checkpoint(cls, path: Union[str, Path], **kwargs) -> "TrustRegionSolver":
        """
        Load a calibrated checkpoint.

        Raises
        ------
        ValueError
            If the checkpoint carries no calibration constants.
        """
        model, calibration = load_checkpoint(path)
        if calibration is None:
            raise ValueError(f"Checkpoint {path} is not calibrated; run 'qaoatrust calibrate' first")
        return cls(model=model, calibration=calibration, **kwargs)

    def predict(self, graph: Graph) -> GaussianPrediction:
        return self.model.predict(graph)

    def region(self, graph: Graph) -> TrustRegion:
        pred = self.predict(graph)
        return TrustRegion.from_gaussian(pred.mu, pred.var, alpha=self.alpha, q=self.q)

    def budget(self, graph: Graph) -> BudgetAllocation:
        u = scalar_uncertainty(self.predict(graph))
        return allocate_budget(u, self.calibration.u_med, self.calibration.u_iqr, self.t_base)

    def solve(self, graph: Graph, seed: int = 0, instance: str = "") -> RunResult:
        """
        Run trust-region inference on one graph.

        Parameters
        ----------
        graph : Graph
        seed : int, optional
            Seed of sampling and measurements.
        instance : str, optional
            Identifier stored in the result.

        Returns
        -------
        RunResult
        """
        return uq_qaoa_infer(
            graph,
            self.model,
            self.calibration,
            t_base=self.t_base,
            alpha=self.alpha,
            q=self.q,
            seed=seed,
            noise=self.noise,
            instance=instance,
            use_trust_region=self.use_trust_region,
            final_shots=self.final_shots,
        )
