import math

import numpy as np
import pytest
import torch

from qaoatrust.graphs import generate
from qaoatrust.predictor import DTYPE
from qaoatrust.training import TrainingConfig, TrainingError, train


def _examples(count: int = 8, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    families = ["ER", "REG3", "BA", "WS"]
    return [
        (generate(families[i % 4], 8, seed * 100 + i), rng.uniform(-0.5, 0.5, size=4))
        for i in range(count)
    ]


def _config(**changes) -> TrainingConfig:
    base = dict(phase1_epochs=4, phase2_epochs=6, patience=50, seed=3)
    base.update(changes)
    return TrainingConfig(**base)


def test_log_has_one_row_per_epoch() -> None:
    result = train(_examples(), _config(), validation=_examples(4, seed=1))
    log = result.log
    assert list(log.columns) == ["epoch", "phase", "train_loss", "val_loss", "lr"]
    assert len(log) == 10
    assert list(log["phase"]) == [1] * 4 + [2] * 6
    assert log["lr"].iloc[0] == pytest.approx(1e-3)
    assert log["lr"].iloc[4] == pytest.approx(1e-3)
    assert result.best_epoch >= 4
    assert result.best_val_loss == log.loc[log["phase"] == 2, "val_loss"].min()


def test_trained_weights_are_float32_exact() -> None:
    model = train(_examples(), _config()).model
    for param in model.parameters():
        assert torch.equal(param, param.to(torch.float32).to(DTYPE))
    assert not model.training


def test_training_is_deterministic() -> None:
    a = train(_examples(), _config())
    b = train(_examples(), _config())
    assert a.log.equals(b.log)
    for pa, pb in zip(a.model.parameters(), b.model.parameters()):
        assert torch.equal(pa, pb)


def test_point_training_uses_mse_only() -> None:
    result = train(_examples(), _config(gaussian=False, phase2_epochs=0))
    assert set(result.log["phase"]) == {1}
    assert result.model.head_logvar is None
    assert math.isfinite(result.best_val_loss)


def test_early_stopping() -> None:
    # a vanishing step size leaves the validation loss unchanged
    result = train(_examples(), _config(phase2_epochs=40, patience=1, lr=1e-300))
    assert len(result.log) == 6
    assert result.best_epoch == 4


def test_non_finite_loss_raises() -> None:
    bad = _examples()
    bad[0] = (bad[0][0], np.full(4, np.inf))
    with pytest.raises(TrainingError, match="Non-finite"):
        train(bad, _config())


def test_rejects_bad_inputs() -> None:
    with pytest.raises(ValueError):
        train([], _config())
    with pytest.raises(ValueError):
        train([(generate("ER", 8, 0), np.zeros(6))], _config())
    with pytest.raises(ValueError):
        TrainingConfig(lr=0.0)
    with pytest.raises(ValueError):
        TrainingConfig(phase1_epochs=0, phase2_epochs=0)
    with pytest.raises(ValueError):
        TrainingConfig(lambda_w=-1.0)
