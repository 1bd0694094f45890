"""Training and calibration glue, method suites and the benchmark experiments."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .baselines import (
    KNN_NEIGHBORS,
    KNNRegressor,
    concentration_heuristic,
    get_method,
    gnn_point,
    knn_predict,
    random_restarts,
    tqa,
)
from .calibration import (
    CalibrationConstants,
    calibration_report,
    conformal_quantile,
    ece,
    fit_constants,
    spearman_rho,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ExperimentConfig, get_preset
from .datasets import GraphRecord, require_targets
from .predictor import GINModel
from .search import RESULT_COLUMNS, RunResult, uq_qaoa_infer
from .stats import significance_table
from .training import TrainingResult, train
from .utils import derive_seed

logger = logging.getLogger(__name__)

ABLATIONS = ("full", "no_trust_region", "no_wasserstein", "no_contrastive", "no_spectral_pe")
_ABLATION_OVERRIDES: Dict[str, Dict[str, Any]] = {
    "no_wasserstein": {"lambda_w": 0.0},
    "no_contrastive": {"lambda_c": 0.0},
    "no_spectral_pe": {"k": 0},
}

PathLike = Union[str, Path]


def checkpoint_path(directory: PathLike, kind: str, seed: int) -> Path:
    """``<directory>/<kind>_seed<seed>.ckpt`` with ``kind`` ``uq`` or ``point``."""
    return Path(directory) / f"{kind}_seed{seed}.ckpt"


def train_model(
    config: ExperimentConfig,
    training: Sequence[GraphRecord],
    validation: Sequence[GraphRecord],
    seed: int,
    gaussian: bool = True,
    **overrides: Any,
) -> TrainingResult:
    """Train one predictor on records with reference angles."""
    require_targets(training)
    require_targets(validation)
    return train(
        [(r.graph, r.target) for r in training],
        config.training_config(seed, gaussian=gaussian, **overrides),
        validation=[(r.graph, r.target) for r in validation],
    )


def calibrate(model: GINModel, records: Sequence[GraphRecord]) -> tuple[CalibrationConstants, pd.DataFrame]:
    """
    Fit calibration constants of a Gaussian model on validation records.

    Returns
    -------
    tuple
        The constants and the calibration report.
    """
    require_targets(records)
    predictions = model.predict_batch([r.graph for r in records])
    targets = [r.target for r in records]
    constants = fit_constants(predictions, targets)
    return constants, calibration_report(predictions, targets, constants)


def train_checkpoints(
    config: ExperimentConfig,
    dataset: Dict[str, Sequence[GraphRecord]],
    checkpoint_dir: PathLike,
    logs_dir: Optional[PathLike] = None,
) -> list[Path]:
    """
    Train the Gaussian and point models for every seed in ``config.seeds``.

    Checkpoints are written uncalibrated; training logs go to ``logs_dir``.
    """
    written = []
    for seed in config.seeds:
        for kind, gaussian in (("uq", True), ("point", False)):
            result = train_model(config, dataset["train"], dataset["val"], seed, gaussian=gaussian)
            path = checkpoint_path(checkpoint_dir, kind, seed)
            save_checkpoint(path, result.model)
            written.append(path)
            if logs_dir is not None:
                Path(logs_dir).mkdir(parents=True, exist_ok=True)
                result.log.to_csv(Path(logs_dir) / f"{kind}_seed{seed}.csv", index=False)
            logger.info("Wrote %s", path)
    return written


def calibrate_checkpoints(
    config: ExperimentConfig,
    dataset: Dict[str, Sequence[GraphRecord]],
    checkpoint_dir: PathLike,
) -> pd.DataFrame:
    """
    Calibrate every Gaussian checkpoint on the validation split, in place.

    Returns
    -------
    pd.DataFrame
        The calibration reports with a leading ``seed`` column.
    """
    reports = []
    for seed in config.seeds:
        path = checkpoint_path(checkpoint_dir, "uq", seed)
        _require_file(path, "train")
        model, _ = load_checkpoint(path, k=config.pe_dim)
        constants, report = calibrate(model, dataset["val"])
        save_checkpoint(path, model, constants)
        reports.append(report.assign(seed=seed)[["seed", "quantity", "value"]])
        logger.info("Calibrated %s: U_med=%.5f U_iqr=%.5f", path, constants.u_med, constants.u_iqr)
    return pd.concat(reports, ignore_index=True)


def _require_file(path: Path, command: str) -> None:
    if not path.is_file():
        raise FileNotFoundError(f"Missing checkpoint {path}; run 'qaoatrust {command}' first")


def load_models(
    checkpoint_dir: PathLike, seed: int, k: int
) -> tuple[GINModel, CalibrationConstants, GINModel]:
    """
    Load the calibrated Gaussian model and the point model of one seed.

    Raises
    ------
    FileNotFoundError
        If a checkpoint is missing.
    ValueError
        If the Gaussian checkpoint has not been calibrated.
    """
    uq_path = checkpoint_path(checkpoint_dir, "uq", seed)
    point_path = checkpoint_path(checkpoint_dir, "point", seed)
    _require_file(uq_path, "train")
    _require_file(point_path, "train")
    uq, calibration = load_checkpoint(uq_path, k=k)
    if calibration is None:
        raise ValueError(f"Checkpoint {uq_path} is not calibrated; run 'qaoatrust calibrate' first")
    point, _ = load_checkpoint(point_path, k=k)
    return uq, calibration, point


@dataclass
class MethodSuite:
    """
    Everything the registered methods need to run on test instances.

    Parameters
    ----------
    config : ExperimentConfig
        Budget, coverage, noise and refinement settings.
    training : sequence of GraphRecord
        Training records with targets (heuristic and k-NN baselines).
    uq_model, calibration : optional
        Calibrated Gaussian model for ``uq_qaoa``.
    point_model : GINModel, optional
        Point model for ``gnn_point``.
    use_trust_region : bool, optional
        Passed to trust-region inference (the ``no_trust_region`` ablation).
    """

    config: ExperimentConfig
    training: Sequence[GraphRecord]
    uq_model: Optional[GINModel] = None
    calibration: Optional[CalibrationConstants] = None
    point_model: Optional[GINModel] = None
    use_trust_region: bool = True
    q: Optional[float] = field(default=None, init=False)
    training_targets: list[np.ndarray] = field(default_factory=list, init=False, repr=False)
    knn: Optional[KNNRegressor] = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        require_targets(self.training)
        self.training_targets = [np.asarray(r.target) for r in self.training]
        self.knn = KNNRegressor.from_graphs([r.graph for r in self.training], self.training_targets)
        if self.config.conformal and self.calibration is not None:
            self.q = conformal_quantile(self.calibration, 1.0 - self.config.alpha)

    def run(self, method: str, record: GraphRecord, seed: int) -> RunResult:
        """
        Run one method on one record.

        Raises
        ------
        ValueError
            For an unknown method or a method whose model is missing.
        """
        get_method(method)
        cfg = self.config
        g = record.graph
        common = dict(seed=seed, noise=cfg.noise, instance=record.instance, final_shots=cfg.final_shots)
        if method == "random":
            return random_restarts(g, iters=cfg.refine_iters, p=cfg.p, **common)
        if method == "heuristic":
            return concentration_heuristic(g, self.training_targets, iters=cfg.refine_iters, **common)
        if method == "knn":
            assert self.knn is not None
            k = min(KNN_NEIGHBORS, len(self.training))
            return knn_predict(g, self.knn, k=k, iters=cfg.refine_iters, **common)
        if method == "tqa":
            return tqa(g, p=cfg.p, iters=cfg.refine_iters, **common)
        if method == "gnn_point":
            if self.point_model is None:
                raise ValueError("Method 'gnn_point' needs a point model")
            return gnn_point(g, self.point_model, t_base=cfg.t_base, **common)
        if self.uq_model is None or self.calibration is None:
            raise ValueError("Method 'uq_qaoa' needs a calibrated Gaussian model")
        return uq_qaoa_infer(
            g,
            self.uq_model,
            self.calibration,
            t_base=cfg.t_base,
            alpha=cfg.alpha,
            q=self.q,
            use_trust_region=self.use_trust_region,
            **common,
        )


def evaluate_instances(
    suite: MethodSuite,
    records: Sequence[GraphRecord],
    methods: Sequence[str],
    master_seed: int,
    workers: int = 1,
) -> list[RunResult]:
    """
    Run every method on every record.

    All methods on one instance share the seed ``derive_seed(master_seed,
    instance)``; results come back in record-major, method-minor order
    whatever the number of workers.
    """
    jobs = [(method, record) for record in records for method in methods]

    def work(job: tuple[str, GraphRecord]) -> RunResult:
        method, record = job
        return suite.run(method, record, derive_seed(master_seed, record.instance))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(job) for job in jobs]
    logger.info(
        "Evaluated %d methods on %d instances: %d objective calls",
        len(methods),
        len(records),
        sum(r.evals for r in results),
    )
    return results


def results_frame(results: Sequence[RunResult], timing: bool = True, **extra: Any) -> pd.DataFrame:
    """Per-run rows; ``extra`` columns come first."""
    columns = list(extra) + list(RESULT_COLUMNS)
    return pd.DataFrame([{**extra, **r.as_row(timing)} for r in results], columns=columns)


def allocations_frame(results: Sequence[RunResult]) -> pd.DataFrame:
    """Budget allocations of the trust-region runs: ``instance, seed, U, z, K, T, evals``."""
    rows = [
        {
            "instance": r.instance,
            "seed": r.seed,
            "U": r.uncertainty,
            "z": r.allocation.z,
            "K": r.allocation.k,
            "T": r.allocation.t,
            "evals": r.evals,
        }
        for r in results
        if r.allocation is not None
    ]
    return pd.DataFrame(rows, columns=["instance", "seed", "U", "z", "K", "T", "evals"])


def mean_std(df: pd.DataFrame, by: Sequence[str], metrics: Sequence[str]) -> pd.DataFrame:
    """Group means and sample standard deviations as ``<metric>_mean``/``<metric>_std``."""
    grouped = df.groupby(list(by), sort=False)[list(metrics)].agg(["mean", "std"])
    grouped.columns = [f"{metric}_{stat}" for metric, stat in grouped.columns]
    return grouped.reset_index()


def efficiency_table(results: pd.DataFrame) -> pd.DataFrame:
    """
    Evaluations, wall time and ratio per method, plus the speedup
    ``median random wall_ms / median method wall_ms`` (NaN without timing).
    """
    table = mean_std(results, ["method"], ["evals", "wall_ms", "ratio"])
    medians = results.groupby("method", sort=False)["wall_ms"].median()
    reference = medians.get("random", np.nan)
    speedup = reference / medians.where(medians > 0)
    table["speedup"] = table["method"].map(speedup)
    return table


def quality_table(results: pd.DataFrame) -> pd.DataFrame:
    """
    Efficiency-adjusted quality per method: ``r / (evals / 100)``, ``r / s``
    and the per-instance evaluation reduction ``1 - evals / evals_random``.
    """
    seconds = results["wall_ms"].where(results["wall_ms"] > 0) / 1000.0
    scored = results.assign(
        ratio_per_100_evals=results["ratio"] / (results["evals"] / 100.0),
        ratio_per_second=results["ratio"] / seconds,
    )
    reference = results.loc[results["method"] == "random", ["instance", "seed", "evals"]]
    scored = scored.merge(reference.rename(columns={"evals": "random_evals"}), on=["instance", "seed"], how="left")
    scored["eval_reduction"] = 1.0 - scored["evals"] / scored["random_evals"]
    return mean_std(scored, ["method"], ["ratio_per_100_evals", "ratio_per_second", "eval_reduction"])


def cross_size_table(results: pd.DataFrame) -> pd.DataFrame:
    return mean_std(results, ["method", "n"], ["evals", "ratio", "wall_ms"])


def family_table(results: pd.DataFrame) -> pd.DataFrame:
    return mean_std(results, ["method", "family"], ["evals", "ratio", "wall_ms"])


def multiseed_table(results: pd.DataFrame) -> pd.DataFrame:
    """Mean and spread across training seeds of the per-seed method means."""
    per_seed = results.groupby(["train_seed", "method"], sort=False)[["evals", "ratio"]].mean().reset_index()
    return mean_std(per_seed, ["method"], ["evals", "ratio"])


def calibration_signal(results: Sequence[RunResult]) -> pd.DataFrame:
    """
    Spearman correlation and ECE between the scalar uncertainty and ``1 - r``
    over the trust-region runs; NaN when too few runs are available.
    """
    runs = [r for r in results if r.uncertainty is not None]
    u = [r.uncertainty for r in runs]
    err = [1.0 - r.ratio for r in runs]
    try:
        rho = spearman_rho(u, err)
    except ValueError:
        rho = np.nan
    try:
        calibration_error = ece(u, err)
    except ValueError:
        calibration_error = np.nan
    return pd.DataFrame(
        [("n", float(len(runs))), ("spearman_rho", rho), ("ece", calibration_error)],
        columns=["quantity", "value"],
    )


def _in_distribution(config: ExperimentConfig, records: Sequence[GraphRecord]) -> list[GraphRecord]:
    same = [r for r in records if r.graph.n == config.train_size]
    return same or list(records)


def run_benchmark(
    config: ExperimentConfig,
    dataset: Dict[str, Sequence[GraphRecord]],
    checkpoint_dir: PathLike,
    results_dir: Optional[PathLike] = None,
) -> Dict[str, pd.DataFrame]:
    """
    Run the experiments named in ``config.experiments``.

    ``main`` evaluates every method on the whole test split with the primary
    (first) training seed; ``multiseed`` repeats it for every seed on the
    in-distribution size; ``shots`` sweeps the shot grid; ``lofo`` retrains
    without each family in turn; ``ablation`` compares trust-region variants;
    ``tbase`` sweeps the base budget.

    Parameters
    ----------
    config : ExperimentConfig
    dataset : dict
        Splits as returned by :func:`~qaoatrust.datasets.read_dataset`.
    checkpoint_dir : str or Path
        Directory with calibrated checkpoints of every seed.
    results_dir : str or Path, optional
        Where each frame is written as ``<name>.csv``.

    Returns
    -------
    dict
        Frames by name.

    Raises
    ------
    FileNotFoundError
        If a checkpoint is missing.
    ValueError
        If the training split has no targets or a checkpoint is uncalibrated,
        or ``lofo`` finds no test graph to hold out.
    """
    train_records, val_records = dataset["train"], dataset["val"]
    require_targets(train_records)
    test = list(dataset["test"])
    in_dist = _in_distribution(config, test)
    primary = config.seeds[0]
    uq, calibration, point = load_models(checkpoint_dir, primary, config.pe_dim)
    suite = MethodSuite(config, train_records, uq, calibration, point)
    timing = config.timing
    frames: Dict[str, pd.DataFrame] = {}

    if "main" in config.experiments:
        runs = evaluate_instances(suite, test, config.methods, config.seed, config.workers)
        results = results_frame(runs, timing)
        frames["results"] = results
        frames["allocations"] = allocations_frame(runs)
        frames["table_efficiency"] = efficiency_table(results)
        frames["table_quality"] = quality_table(results)
        frames["table_cross_size"] = cross_size_table(results)
        frames["table_family"] = family_table(results)
        frames["table_significance"] = significance_table(results)
        frames["calibration_signal"] = calibration_signal(runs)

    if "multiseed" in config.experiments:
        parts = []
        for seed in config.seeds:
            uq_s, calibration_s, point_s = load_models(checkpoint_dir, seed, config.pe_dim)
            suite_s = MethodSuite(config, train_records, uq_s, calibration_s, point_s)
            runs = evaluate_instances(suite_s, in_dist, config.methods, seed, config.workers)
            parts.append(results_frame(runs, timing, train_seed=seed))
        frames["results_multiseed"] = pd.concat(parts, ignore_index=True)
        frames["table_multiseed"] = multiseed_table(frames["results_multiseed"])

    if "shots" in config.experiments:
        parts = []
        for shots in config.shot_grid:
            suite_s = MethodSuite(config.replace(shots=shots), train_records, uq, calibration, point)
            for repeat in range(config.shot_repeats):
                master = derive_seed(config.seed, "shots", shots, repeat)
                runs = evaluate_instances(suite_s, in_dist, config.methods, master, config.workers)
                parts.append(results_frame(runs, timing, shots=shots, repeat=repeat))
        frames["results_shots"] = pd.concat(parts, ignore_index=True)
        frames["table_shots"] = mean_std(frames["results_shots"], ["shots", "method"], ["evals", "ratio"])

    if "lofo" in config.experiments:
        parts = []
        for family in config.families:
            held_in = [r for r in train_records if r.family.value != family]
            held_in_val = [r for r in val_records if r.family.value != family]
            held_out = [r for r in in_dist if r.family.value == family]
            if not held_out:
                continue
            uq_f = train_model(config, held_in, held_in_val, primary).model
            point_f = train_model(config, held_in, held_in_val, primary, gaussian=False).model
            calibration_f, _ = calibrate(uq_f, held_in_val)
            suite_f = MethodSuite(config, held_in, uq_f, calibration_f, point_f)
            runs = evaluate_instances(suite_f, held_out, config.methods, config.seed, config.workers)
            parts.append(results_frame(runs, timing, held_out=family))
        if not parts:
            raise ValueError(
                f"No test graphs of families {list(config.families)} to hold out for leave-one-family-out"
            )
        frames["results_lofo"] = pd.concat(parts, ignore_index=True)
        frames["table_lofo"] = mean_std(frames["results_lofo"], ["held_out", "method"], ["evals", "ratio"])

    if "ablation" in config.experiments:
        parts = []
        for variant in ABLATIONS:
            if variant in _ABLATION_OVERRIDES:
                model = train_model(config, train_records, val_records, primary, **_ABLATION_OVERRIDES[variant]).model
                calibration_v, _ = calibrate(model, val_records)
            else:
                model, calibration_v = uq, calibration
            suite_v = MethodSuite(
                config, train_records, model, calibration_v, point, use_trust_region=variant != "no_trust_region"
            )
            runs = evaluate_instances(suite_v, in_dist, ("uq_qaoa",), config.seed, config.workers)
            parts.append(results_frame(runs, timing, variant=variant))
        frames["results_ablation"] = pd.concat(parts, ignore_index=True)
        frames["table_ablation"] = mean_std(frames["results_ablation"], ["variant"], ["evals", "ratio"])

    if "tbase" in config.experiments:
        parts = []
        for t_base in config.tbase_grid:
            suite_t = MethodSuite(config.replace(t_base=t_base), train_records, uq, calibration, point)
            runs = evaluate_instances(suite_t, in_dist, ("uq_qaoa",), config.seed, config.workers)
            parts.append(results_frame(runs, timing, t_base=t_base))
        frames["results_tbase"] = pd.concat(parts, ignore_index=True)
        frames["table_tbase"] = mean_std(frames["results_tbase"], ["t_base"], ["evals", "ratio"])

    if results_dir is not None:
        write_frames(frames, results_dir)
    return frames


def write_frames(frames: Dict[str, pd.DataFrame], directory: PathLike) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, frame in frames.items():
        frame.to_csv(directory / f"{name}.csv", index=False)


def sensitivity_sweep(
    config: ExperimentConfig,
    dataset: Dict[str, Sequence[GraphRecord]],
    presets: Sequence[str],
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """
    Retrain the Gaussian model under each hyperparameter preset and evaluate
    ``uq_qaoa`` on the in-distribution test graphs.

    Returns
    -------
    tuple of pd.DataFrame
        Per-run results with a ``preset`` column, and the per-preset summary
        with the best validation loss.
    """
    resolved = [get_preset(name) for name in presets]
    train_records, val_records = dataset["train"], dataset["val"]
    in_dist = _in_distribution(config, dataset["test"])
    seed = config.seeds[0]
    parts, losses = [], {}
    for preset in resolved:
        trained = train_model(config, train_records, val_records, seed, **preset.overrides)
        calibration, _ = calibrate(trained.model, val_records)
        suite = MethodSuite(config, train_records, trained.model, calibration)
        runs = evaluate_instances(suite, in_dist, ("uq_qaoa",), config.seed, config.workers)
        parts.append(results_frame(runs, config.timing, preset=preset.name))
        losses[preset.name] = trained.best_val_loss
        logger.info("Preset %s: validation loss %.5f", preset.name, trained.best_val_loss)
    results = pd.concat(parts, ignore_index=True)
    table = mean_std(results, ["preset"], ["evals", "ratio"])
    table["val_loss"] = table["preset"].map(losses)
    return results, table
