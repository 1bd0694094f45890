from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from qaoatrust.config import ExperimentConfig
from qaoatrust.datasets import gen_dataset, gen_targets
from qaoatrust.experiments import (
    MethodSuite,
    calibrate_checkpoints,
    calibration_signal,
    checkpoint_path,
    efficiency_table,
    evaluate_instances,
    load_models,
    mean_std,
    quality_table,
    results_frame,
    run_benchmark,
    train_checkpoints,
)


def _config(**changes) -> ExperimentConfig:
    base = dict(
        sizes=(8,),
        train_size=8,
        train_per_family=2,
        val_per_family=3,
        test_per_family=1,
        seeds=(1,),
        phase1_epochs=2,
        phase2_epochs=2,
        target_restarts=1,
        target_iters=10,
        refine_iters=5,
        t_base=4,
        final_shots=16,
        timing=False,
        shot_grid=(16,),
        tbase_grid=(4,),
    )
    base.update(changes)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def dataset() -> dict:
    config = _config()
    raw = gen_dataset(config)
    return {
        split: gen_targets(records, restarts=1, iters=10, seed=config.seed, p=config.p)
        for split, records in raw.items()
    }


@pytest.fixture(scope="module")
def checkpoints(dataset: dict, tmp_path_factory: pytest.TempPathFactory) -> Path:
    directory = tmp_path_factory.mktemp("checkpoints")
    train_checkpoints(_config(), dataset, directory, directory / "logs")
    calibrate_checkpoints(_config(), dataset, directory)
    return directory


def test_checkpoints_and_logs(checkpoints: Path) -> None:
    assert checkpoint_path(checkpoints, "uq", 1).is_file()
    assert checkpoint_path(checkpoints, "point", 1).is_file()
    log = pd.read_csv(checkpoints / "logs" / "uq_seed1.csv")
    assert len(log) == 4
    uq, calibration, point = load_models(checkpoints, 1, k=6)
    assert uq.gaussian and not point.gaussian
    assert len(calibration.conformal_scores) == 12


def test_missing_checkpoints(tmp_path: Path) -> None:
    with pytest.raises(FileNotFoundError, match="train"):
        load_models(tmp_path, 1, k=6)


def test_methods_share_instance_seeds(dataset: dict, checkpoints: Path) -> None:
    uq, calibration, point = load_models(checkpoints, 1, k=6)
    suite = MethodSuite(_config(), dataset["train"], uq, calibration, point)
    methods = ("random", "heuristic", "knn", "tqa", "gnn_point", "uq_qaoa")
    runs = evaluate_instances(suite, dataset["test"][:2], methods, master_seed=5)
    assert [r.method for r in runs[:6]] == list(methods)
    assert len({r.seed for r in runs[:6]}) == 1
    assert runs[0].seed != runs[6].seed
    again = evaluate_instances(suite, dataset["test"][:2], methods, master_seed=5, workers=3)
    assert [r.ratio for r in runs] == [r.ratio for r in again]

    frame = results_frame(runs, timing=False, train_seed=1)
    assert list(frame.columns)[0] == "train_seed"
    assert (frame["wall_ms"] == 0.0).all()
    assert efficiency_table(frame)["speedup"].isna().all()
    signal = calibration_signal(runs).set_index("quantity")["value"]
    assert signal["n"] == 2


def test_lofo_without_test_graphs(dataset: dict, checkpoints: Path) -> None:
    with pytest.raises(ValueError, match="leave-one-family-out"):
        run_benchmark(_config(experiments=("lofo",)), {**dataset, "test": []}, checkpoints)


def test_suite_requires_models(dataset: dict) -> None:
    suite = MethodSuite(_config(), dataset["train"])
    with pytest.raises(ValueError, match="point model"):
        suite.run("gnn_point", dataset["test"][0], 0)
    with pytest.raises(ValueError, match="calibrated"):
        suite.run("uq_qaoa", dataset["test"][0], 0)
    with pytest.raises(ValueError, match="Available"):
        suite.run("annealing", dataset["test"][0], 0)


def test_quality_table() -> None:
    results = pd.DataFrame(
        {
            "instance": ["a", "a", "b", "b"],
            "seed": [1, 1, 2, 2],
            "method": ["random", "uq_qaoa"] * 2,
            "evals": [200, 50, 100, 50],
            "ratio": [1.0, 0.9, 1.0, 0.8],
            "wall_ms": [1000.0, 100.0, 500.0, 100.0],
        }
    )
    table = quality_table(results).set_index("method")
    assert table.loc["uq_qaoa", "eval_reduction_mean"] == pytest.approx((0.75 + 0.5) / 2)
    assert table.loc["uq_qaoa", "ratio_per_100_evals_mean"] == pytest.approx(1.7)
    assert table.loc["random", "eval_reduction_mean"] == 0.0
    stats = mean_std(results, ["method"], ["evals"]).set_index("method")
    assert stats.loc["random", "evals_std"] == pytest.approx(np.std([200, 100], ddof=1))


def test_main_benchmark(dataset: dict, checkpoints: Path, tmp_path: Path) -> None:
    frames = run_benchmark(_config(), dataset, checkpoints, tmp_path)
    results = frames["results"]
    assert len(results) == 4 * 6
    assert len(frames["allocations"]) == 4
    assert set(frames["table_efficiency"]["method"]) == set(results["method"])
    assert (tmp_path / "table_significance.csv").is_file()


@pytest.mark.slow
def test_all_experiments(dataset: dict, checkpoints: Path, tmp_path: Path) -> None:
    config = _config(experiments=("multiseed", "shots", "lofo", "ablation", "tbase"), methods=("random", "uq_qaoa"))
    frames = run_benchmark(config, dataset, checkpoints, tmp_path)
    assert {"results_multiseed", "results_shots", "results_lofo", "results_ablation", "results_tbase"} <= set(frames)
    assert set(frames["results_ablation"]["variant"]) == {
        "full",
        "no_trust_region",
        "no_wasserstein",
        "no_contrastive",
        "no_spectral_pe",
    }
    assert set(frames["results_lofo"]["held_out"]) == {"ER", "REG3", "BA", "WS"}
    assert (frames["results_shots"]["shots"] == 16).all()
