"""Two-phase full-batch training of the angle predictor."""

import copy
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd
import torch

from .graphs import Graph
from .predictor import (
    DTYPE,
    GINModel,
    GraphBatch,
    loss_contrastive,
    loss_mse,
    loss_nll,
    loss_w2,
    median_pairwise_distance,
)
from .spectral import DEFAULT_PE_DIM
from .utils import make_rng

logger = logging.getLogger(__name__)

Example = tuple[Graph, np.ndarray]


class TrainingError(RuntimeError):
    """Raised when a loss becomes non-finite."""


@dataclass(frozen=True)
class TrainingConfig:
    """
    Hyperparameters of the two-phase schedule.

    Phase 1 fits the mean (``MSE + lambda_c * CL``); phase 2 fits the full
    Gaussian (``NLL + lambda_w * W2 + lambda_c * CL``). Each phase has its own
    cosine learning-rate cycle.
    """

    lambda_w: float = 0.1
    lambda_c: float = 0.05
    tau_w: float = 0.5
    tau_c: float = 0.1
    contrastive_delta: Optional[float] = None
    lr: float = 1e-3
    weight_decay: float = 1e-5
    phase1_epochs: int = 150
    phase2_epochs: int = 150
    grad_clip: float = 1.0
    patience: int = 50
    seed: int = 0
    k: int = DEFAULT_PE_DIM
    p: int = 2
    gaussian: bool = True
    sign_flips: bool = True

    def __post_init__(self) -> None:
        for name in ("tau_w", "tau_c", "lr", "grad_clip"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("lambda_w", "lambda_c", "weight_decay"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.phase1_epochs < 0 or self.phase2_epochs < 0 or self.epochs == 0:
            raise ValueError("Epoch counts must be non-negative with a positive total")
        if self.patience < 1:
            raise ValueError(f"patience must be positive, got {self.patience}")
        if self.contrastive_delta is not None and self.contrastive_delta < 0:
            raise ValueError("contrastive_delta must be non-negative")

    @property
    def epochs(self) -> int:
        return self.phase1_epochs + self.phase2_epochs


@dataclass
class TrainingResult:
    """
    Parameters
    ----------
    model : GINModel
        Weights with the best phase-2 validation loss (final weights when
        there is no phase 2).
    log : pd.DataFrame
        One row per epoch: ``epoch, phase, train_loss, val_loss, lr``.
    best_epoch : int
    best_val_loss : float
    """

    model: GINModel
    log: pd.DataFrame
    best_epoch: int
    best_val_loss: float


def _cosine_factor(epoch: int, config: TrainingConfig) -> float:
    if epoch < config.phase1_epochs:
        t, length = epoch, config.phase1_epochs
    else:
        t, length = epoch - config.phase1_epochs, config.phase2_epochs
    return 0.5 * (1.0 + math.cos(math.pi * t / max(length, 1)))


def _loss_terms(
    model: GINModel,
    batch: GraphBatch,
    target: torch.Tensor,
    phase: int,
    config: TrainingConfig,
    delta: float,
) -> dict[str, torch.Tensor]:
    mu, logvar, embedding = model(batch)
    terms = {"cl": loss_contrastive(embedding, target, delta, config.tau_c)}
    if phase == 1 or not config.gaussian:
        terms["mse"] = loss_mse(mu, target)
        terms["total"] = terms["mse"] + config.lambda_c * terms["cl"]
    else:
        terms["nll"] = loss_nll(mu, logvar, target)
        terms["w2"] = loss_w2(mu, logvar, target, config.tau_w)
        terms["total"] = terms["nll"] + config.lambda_w * terms["w2"] + config.lambda_c * terms["cl"]
    return terms


def _check_finite(terms: dict[str, torch.Tensor], epoch: int, phase: int, split: str) -> None:
    if not all(torch.isfinite(value).item() for value in terms.values()):
        detail = ", ".join(f"{name}={value.item():.6g}" for name, value in terms.items())
        raise TrainingError(f"Non-finite {split} loss at epoch {epoch} (phase {phase}): {detail}")


def _stack_targets(examples: Sequence[Example], p: int) -> torch.Tensor:
    targets = np.stack([np.asarray(t, dtype=np.float64) for _, t in examples])
    if targets.shape[1] != 2 * p:
        raise ValueError(f"Targets have {targets.shape[1]} angles, model predicts {2 * p}")
    return torch.as_tensor(targets, dtype=DTYPE)


def train(
    examples: Sequence[Example],
    config: TrainingConfig = TrainingConfig(),
    validation: Optional[Sequence[Example]] = None,
) -> TrainingResult:
    """
    Train a predictor on ``(graph, target angles)`` pairs.

    Parameters
    ----------
    examples : sequence of (Graph, np.ndarray)
        Training set, used as one full batch.
    config : TrainingConfig, optional
    validation : sequence of (Graph, np.ndarray), optional
        Early-stopping set; the training set is used when omitted.

    Returns
    -------
    TrainingResult

    Raises
    ------
    ValueError
        If the training set is empty.
    TrainingError
        If a loss becomes non-finite.
    """
    if not examples:
        raise ValueError("Training set is empty")
    validation = list(validation) if validation else list(examples)

    model = GINModel(k=config.k, p=config.p, gaussian=config.gaussian, seed=config.seed)
    batch = GraphBatch.from_graphs([g for g, _ in examples], config.k)
    target = _stack_targets(examples, config.p)
    val_batch = GraphBatch.from_graphs([g for g, _ in validation], config.k)
    val_target = _stack_targets(validation, config.p)
    delta = (
        config.contrastive_delta
        if config.contrastive_delta is not None
        else median_pairwise_distance(target.numpy())
    )
    rng = make_rng(config.seed, "sign-flips")

    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr, weight_decay=config.weight_decay)
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda epoch: _cosine_factor(epoch, config)
    )

    rows = []
    best_state = copy.deepcopy(model.state_dict())
    best_val, best_epoch, stale = math.inf, config.epochs - 1, 0
    for epoch in range(config.epochs):
        phase = 1 if epoch < config.phase1_epochs else 2
        lr = optimizer.param_groups[0]["lr"]
        model.train()
        inputs = batch.with_sign_flips(rng) if config.sign_flips else batch
        optimizer.zero_grad()
        terms = _loss_terms(model, inputs, target, phase, config, delta)
        _check_finite(terms, epoch, phase, "training")
        terms["total"].backward()
        torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
        optimizer.step()
        scheduler.step()

        model.eval()
        with torch.no_grad():
            val_terms = _loss_terms(model, val_batch, val_target, phase, config, delta)
        _check_finite(val_terms, epoch, phase, "validation")
        val_loss = val_terms["total"].item()
        rows.append(
            {
                "epoch": epoch,
                "phase": phase,
                "train_loss": terms["total"].item(),
                "val_loss": val_loss,
                "lr": lr,
            }
        )
        logger.debug("epoch %d phase %d train %.5f val %.5f", epoch, phase, rows[-1]["train_loss"], val_loss)

        if phase == 2 or config.phase2_epochs == 0:
            if val_loss < best_val:
                best_val, best_epoch, stale = val_loss, epoch, 0
                best_state = copy.deepcopy(model.state_dict())
            else:
                stale += 1
                if stale >= config.patience:
                    logger.info("Early stop at epoch %d, best epoch %d", epoch, best_epoch)
                    break

    model.load_state_dict(best_state)
    model.round_to_float32()
    model.eval()
    logger.info(
        "Trained %s model on %d graphs: best validation loss %.5f at epoch %d",
        "Gaussian" if config.gaussian else "point",
        len(examples),
        best_val,
        best_epoch,
    )
    return TrainingResult(model=model, log=pd.DataFrame(rows), best_epoch=best_epoch, best_val_loss=best_val)
