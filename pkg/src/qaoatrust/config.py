"""Experiment configuration, ``key = value`` config files and sensitivity presets."""

import dataclasses
import types
import typing
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

from .baselines import get_method
from .engine import NoiseModel
from .graphs import Family
from .training import TrainingConfig

ALL_METHODS = ("random", "heuristic", "knn", "tqa", "gnn_point", "uq_qaoa")
EXPERIMENTS = ("main", "multiseed", "shots", "lofo", "ablation", "tbase")


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything a pipeline run depends on.

    Parameters
    ----------
    sizes : tuple of int
        Test graph sizes.
    train_size : int
        Vertex count of training and validation graphs.
    train_per_family, val_per_family, test_per_family : int
        Graphs per family in each split (test counts are per size).
    t_base : int
        Base Nelder-Mead iteration budget.
    alpha : float
        Trust-region coverage.
    conformal : bool
        Use the conformal radius instead of the chi-square quantile.
    shots : int, optional
        Shots per evaluation; ``None`` for exact expectations.
    epsilon : float
        Per-layer depolarizing strength.
    seed : int
        Master seed of the dataset and of every derived stream.
    seeds : tuple of int
        Training seeds of the multi-seed experiment; the first is primary.
    methods : tuple of str
        Methods to benchmark.
    output_dir : str
        Root directory of all artifacts.
    """

    sizes: tuple[int, ...] = (8, 10, 12, 14, 16)
    train_size: int = 14
    train_per_family: int = 60
    val_per_family: int = 20
    test_per_family: int = 12
    t_base: int = 30
    alpha: float = 0.95
    conformal: bool = False
    shots: Optional[int] = None
    epsilon: float = 0.0
    seed: int = 42
    seeds: tuple[int, ...] = (42, 123, 456, 789, 1024)
    methods: tuple[str, ...] = ALL_METHODS
    output_dir: str = "results"
    families: tuple[str, ...] = tuple(f.value for f in Family)
    p: int = 2
    pe_dim: int = 6
    target_restarts: int = 8
    target_iters: int = 200
    refine_iters: int = 60
    final_shots: int = 256
    phase1_epochs: int = 150
    phase2_epochs: int = 150
    lambda_w: float = 0.1
    lambda_c: float = 0.05
    tau_w: float = 0.5
    tau_c: float = 0.1
    patience: int = 50
    shot_grid: tuple[int, ...] = (512, 1024, 4096, 8192)
    shot_repeats: int = 1
    tbase_grid: tuple[int, ...] = (10, 20, 30, 40, 60)
    experiments: tuple[str, ...] = ("main",)
    workers: int = 1
    timing: bool = True

    def __post_init__(self) -> None:
        counts = ("train_per_family", "val_per_family", "test_per_family", "target_restarts", "workers", "shot_repeats")
        for name in counts:
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.sizes or not self.seeds:
            raise ValueError("sizes and seeds must be non-empty")
        for method in self.methods:
            get_method(method)
        for name in self.experiments:
            if name not in EXPERIMENTS:
                raise ValueError(f"Unknown experiment {name!r}. Available: {list(EXPERIMENTS)}")
        NoiseModel(epsilon=self.epsilon, shots=self.shots)

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(epsilon=self.epsilon, shots=self.shots)

    @property
    def path(self) -> Path:
        return Path(self.output_dir)

    def training_config(self, seed: int, gaussian: bool = True, **overrides: Any) -> TrainingConfig:
        """
        Training hyperparameters for one model.

        A point model (``gaussian=False``) trains on the phase-1 objective for
        the whole epoch budget.
        """
        epochs = (
            (self.phase1_epochs, self.phase2_epochs)
            if gaussian
            else (self.phase1_epochs + self.phase2_epochs, 0)
        )
        params = dict(
            lambda_w=self.lambda_w,
            lambda_c=self.lambda_c,
            tau_w=self.tau_w,
            tau_c=self.tau_c,
            phase1_epochs=epochs[0],
            phase2_epochs=epochs[1],
            patience=self.patience,
            seed=seed,
            k=self.pe_dim,
            p=self.p,
            gaussian=gaussian,
        )
        params.update(overrides)
        return TrainingConfig(**params)

    def replace(self, **changes: Any) -> "ExperimentConfig":
        """Copy with ``changes`` applied; ``None`` values are ignored."""
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


_TYPE_HINTS = typing.get_type_hints(ExperimentConfig)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"Expected a boolean, got {text!r}")


def _convert(hint: Any, text: str) -> Any:
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin in (Union, types.UnionType) and type(None) in args:
        if text.strip().lower() in ("", "none", "null"):
            return None
        inner = next(a for a in args if a is not type(None))
        return _convert(inner, text)
    if origin is tuple:
        items = [item.strip() for item in text.split(",") if item.strip()]
        return tuple(_convert(args[0], item) for item in items)
    if hint is bool:
        return _parse_bool(text)
    if hint is int:
        return int(text)
    if hint is float:
        return float(text)
    return text.strip()


def parse_config(text: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """
    Parse flat ``key = value`` lines over ``base`` (defaults when omitted).

    Blank lines and ``#`` comments are ignored; list values are
    comma-separated.

    Raises
    ------
    ValueError
        On unknown keys, malformed lines, or values of the wrong type.
    """
    changes: Dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ValueError(f"Line {number}: expected 'key = value', got {raw.strip()!r}")
        if key not in _TYPE_HINTS:
            raise ValueError(f"Line {number}: unknown config key {key!r}")
        try:
            changes[key] = _convert(_TYPE_HINTS[key], value)
        except ValueError as exc:
            raise ValueError(f"Line {number}: invalid value for {key!r}: {exc}") from None
    return dataclasses.replace(base or ExperimentConfig(), **changes)


def load_config(path: Union[str, Path], base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Read a config file; see :func:`parse_config`."""
    return parse_config(Path(path).read_text(encoding="utf-8"), base)


@dataclass(frozen=True)
class Preset:
    """A named set of hyperparameter overrides for the sensitivity sweep."""

    name: str
    overrides: Dict[str, Any]
    description: str


_PRESETS: Dict[str, Preset] = {
    "default": Preset("default", {}, "Default loss weights and temperatures"),
    "lambda_w_low": Preset("lambda_w_low", {"lambda_w": 0.01}, "Wasserstein weight 0.01"),
    "lambda_w_high": Preset("lambda_w_high", {"lambda_w": 0.5}, "Wasserstein weight 0.5"),
    "lambda_c_off": Preset("lambda_c_off", {"lambda_c": 0.0}, "No contrastive term"),
    "lambda_c_high": Preset("lambda_c_high", {"lambda_c": 0.2}, "Contrastive weight 0.2"),
    "tau_w_low": Preset("tau_w_low", {"tau_w": 0.2}, "Wasserstein temperature 0.2"),
    "tau_w_high": Preset("tau_w_high", {"tau_w": 1.0}, "Wasserstein temperature 1.0"),
}


def get_preset(name: str) -> Preset:
    """
    Retrieve a sensitivity preset by name.

    Raises
    ------
    ValueError
        If the preset name is not found.
    """
    try:
        return _PRESETS[name]
    except KeyError:
        raise ValueError(f"Unknown preset {name!r}. Available: {list(_PRESETS)}") from None


def list_presets() -> Dict[str, str]:
    """Map preset names to descriptions."""
    return {k: v.description for k, v in _PRESETS.items()}
