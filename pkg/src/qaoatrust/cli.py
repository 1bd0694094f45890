"""Command-line interface for qaoatrust."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, NoReturn, Optional

import pandas as pd
import typer

from .baselines import list_methods as registered_methods
from .bounds import BoundInputs, bound_table
from .config import ExperimentConfig, list_presets as registered_presets, load_config
from .datasets import gen_dataset, gen_targets, read_dataset, write_dataset
from .experiments import calibrate_checkpoints, run_benchmark, sensitivity_sweep, train_checkpoints
from .report import build_report

app = typer.Typer(
    name="qaoatrust",
    help="Uncertainty-aware trust-region initialization and budgeting for MaxCut QAOA.",
    no_args_is_help=True,
)

_ERRORS = (ValueError, RuntimeError, OSError)

CONFIG_OPTION = typer.Option(None, "--config", "-c", exists=True, readable=True, help="Config file of 'key = value' lines.")
SEED_OPTION = typer.Option(None, "--seed", help="Master seed (overrides the config).")
OUT_OPTION = typer.Option(None, "--out", help="Output root directory (overrides output_dir).")


def _fail(message: str) -> NoReturn:
    typer.echo(message, err=True)
    raise typer.Exit(code=1)


def _write_csv(df: pd.DataFrame, output: Optional[Path]) -> None:
    """Write DataFrame to a path, or stdout when output is None or '-'."""
    if output is None or str(output) == "-":
        typer.echo(df.to_csv(index=False), nl=False)
        return
    output.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(output, index=False)


@dataclass(frozen=True)
class _Layout:
    root: Path

    @property
    def dataset(self) -> Path:
        return self.root / "dataset"

    @property
    def checkpoints(self) -> Path:
        return self.root / "checkpoints"

    @property
    def results(self) -> Path:
        return self.root / "results"

    @property
    def figures(self) -> Path:
        return self.root / "figures"

    @property
    def logs(self) -> Path:
        return self.root / "logs"


def _load(config_path: Optional[Path], out: Optional[Path], **overrides) -> tuple[ExperimentConfig, _Layout]:
    try:
        base = load_config(config_path) if config_path is not None else ExperimentConfig()
        config = base.replace(output_dir=str(out) if out is not None else None, **overrides)
    except _ERRORS as exc:
        _fail(str(exc))
    return config, _Layout(config.path)


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log progress to stderr."),
) -> None:
    """Uncertainty-aware trust-region initialization and budgeting for MaxCut QAOA."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@app.command("list-methods")
def list_methods() -> None:
    """List the benchmarked optimization methods."""
    for name, description in registered_methods().items():
        typer.echo(f"{name}: {description}")


@app.command("list-presets")
def list_presets() -> None:
    """List the hyperparameter presets of the sensitivity sweep."""
    for name, description in registered_presets().items():
        typer.echo(f"{name}: {description}")


@app.command()
def generate(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
) -> None:
    """Generate the train, validation and test graphs."""
    cfg, layout = _load(config, out, seed=seed)
    try:
        dataset = gen_dataset(cfg)
        write_dataset(dataset, layout.dataset)
    except _ERRORS as exc:
        _fail(str(exc))
    for split, records in dataset.items():
        typer.echo(f"{split}: {len(records)} graphs")
    typer.echo(f"Wrote {layout.dataset}")


@app.command()
def targets(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    workers: Optional[int] = typer.Option(None, "--workers", help="Worker threads."),
) -> None:
    """Compute reference angles for every graph of the dataset."""
    cfg, layout = _load(config, out, seed=seed, workers=workers)
    try:
        dataset = read_dataset(layout.dataset)
        solved = {
            split: gen_targets(
                records,
                restarts=cfg.target_restarts,
                iters=cfg.target_iters,
                seed=cfg.seed,
                p=cfg.p,
                workers=cfg.workers,
            )
            for split, records in dataset.items()
        }
        write_dataset(solved, layout.dataset)
    except _ERRORS as exc:
        _fail(str(exc))
    typer.echo(f"Wrote targets for {sum(len(r) for r in solved.values())} graphs to {layout.dataset}")


@app.command()
def train(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
) -> None:
    """Train the Gaussian and point predictors for every training seed."""
    cfg, layout = _load(config, out, seed=seed)
    try:
        dataset = read_dataset(layout.dataset)
        written = train_checkpoints(cfg, dataset, layout.checkpoints, layout.logs)
    except _ERRORS as exc:
        _fail(str(exc))
    for path in written:
        typer.echo(f"Wrote {path}")


@app.command()
def calibrate(
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    output: Optional[Path] = typer.Option(
        None,
        "--output",
        "-o",
        help="Calibration report CSV path. Omit or use '-' for stdout.",
    ),
) -> None:
    """Fit calibration constants on the validation split and embed them in the checkpoints."""
    cfg, layout = _load(config, out)
    try:
        dataset = read_dataset(layout.dataset)
        report = calibrate_checkpoints(cfg, dataset, layout.checkpoints)
    except _ERRORS as exc:
        _fail(str(exc))
    _write_csv(report, output)


@app.command()
def evaluate(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    shots: Optional[int] = typer.Option(None, "--shots", help="Shots per evaluation (exact when omitted)."),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Trust-region coverage."),
    conformal: Optional[bool] = typer.Option(
        None, "--conformal/--no-conformal", help="Use the conformal radius instead of the chi-square quantile."
    ),
    tbase: Optional[int] = typer.Option(None, "--tbase", help="Base Nelder-Mead iteration budget."),
    experiment: Optional[List[str]] = typer.Option(
        None, "--experiment", "-e", help="Experiment to run (repeatable); defaults to the config."
    ),
    workers: Optional[int] = typer.Option(None, "--workers", help="Worker threads."),
) -> None:
    """Run the benchmark experiments and write results and summary tables."""
    cfg, layout = _load(
        config,
        out,
        seed=seed,
        shots=shots,
        alpha=alpha,
        conformal=conformal,
        t_base=tbase,
        experiments=tuple(experiment) if experiment else None,
        workers=workers,
    )
    try:
        dataset = read_dataset(layout.dataset)
        frames = run_benchmark(cfg, dataset, layout.checkpoints, layout.results)
    except _ERRORS as exc:
        _fail(str(exc))
    for name in frames:
        typer.echo(f"Wrote {layout.results / f'{name}.csv'}")
    if "table_efficiency" in frames:
        typer.echo(frames["table_efficiency"].to_string(index=False))


@app.command()
def bounds(
    output: Optional[Path] = typer.Option(
        None,
        "--output",
        "-o",
        help="Output CSV path. Omit or use '-' for stdout.",
    ),
    m: int = typer.Option(21, "--edges", help="Edge count."),
    p: int = typer.Option(2, "--depth", help="QAOA depth."),
    alpha: float = typer.Option(0.95, "--alpha", help="Trust-region coverage."),
    sigma: float = typer.Option(0.15, "--sigma", help="Standard deviation of every angle."),
    r_star: float = typer.Option(0.851, "--r-star", help="Approximation ratio at the predicted mean."),
    epsilon: float = typer.Option(0.01, "--epsilon", help="Per-layer depolarizing strength."),
    k: int = typer.Option(3, "--seeds", help="Number of trust-region seeds."),
    n_train: int = typer.Option(240, "--n-train", help="Training set size."),
) -> None:
    """Instantiate the landscape, budget, noise and generalization bounds."""
    try:
        inputs = BoundInputs(
            m=m, p=p, alpha=alpha, sigma=(sigma,) * (2 * p), r_star=r_star, epsilon=epsilon, k=k, n_train=n_train
        )
        table = bound_table(inputs)
    except _ERRORS as exc:
        _fail(str(exc))
    _write_csv(table, output)


@app.command()
def report(
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
) -> None:
    """Write plot-ready data files from the benchmark results."""
    cfg, layout = _load(config, out)
    try:
        graphs = None
        if (layout.dataset / "test.txt").is_file():
            graphs = {r.instance: r.graph for r in read_dataset(layout.dataset)["test"]}
        frames = build_report(layout.results, layout.figures, graphs=graphs, p=cfg.p)
    except _ERRORS as exc:
        _fail(str(exc))
    for name in frames:
        typer.echo(f"Wrote {layout.figures / f'{name}.csv'}")


@app.command()
def sensitivity(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    preset: Optional[List[str]] = typer.Option(
        None, "--preset", "-p", help="Preset to run (repeatable); defaults to all."
    ),
    output: Optional[Path] = typer.Option(
        None,
        "--output",
        "-o",
        help="Summary CSV path. Omit or use '-' for stdout.",
    ),
) -> None:
    """Retrain under hyperparameter presets and compare trust-region results."""
    cfg, layout = _load(config, out, seed=seed)
    names = preset or list(registered_presets())
    try:
        dataset = read_dataset(layout.dataset)
        results, table = sensitivity_sweep(cfg, dataset, names)
        layout.results.mkdir(parents=True, exist_ok=True)
        results.to_csv(layout.results / "results_sensitivity.csv", index=False)
    except _ERRORS as exc:
        _fail(str(exc))
    _write_csv(table, output)


if __name__ == "__main__":
    app()
