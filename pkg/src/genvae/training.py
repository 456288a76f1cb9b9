"""
Minibatch gradient descent for VaeModel and a finite-difference gradient check.
"""

from typing import Callable, Dict, List, Optional, Tuple
import logging

import numpy as np
from pydantic import BaseModel, Field

from src.errors import ModelError
from src.genvae.network import PARAMETER_NAMES, VaeModel

logger = logging.getLogger(__name__)

GRADIENT_CHECK_FLOOR = 1e-4


class TrainingHyperparams(BaseModel):
    epochs: int = Field(200, ge=0)
    batch_size: int = Field(32, ge=1)
    learning_rate: float = Field(5e-3, ge=0.0)
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    beta: float = Field(1.0, ge=0.0)
    property_weight: float = Field(1.0, ge=0.0)


class TrainingHistory(BaseModel):
    """Per-epoch losses of one training run."""

    train_loss: List[float] = Field(default_factory=list)
    train_mse: List[float] = Field(default_factory=list)
    val_loss: List[float] = Field(default_factory=list)
    val_mse: List[float] = Field(default_factory=list)
    best_epoch: Optional[int] = None
    diverged: bool = False
    message: str = ""

    def rows(self) -> List[Dict[str, float]]:
        return [
            {
                "epoch": i + 1,
                "train_loss": self.train_loss[i],
                "train_mse": self.train_mse[i],
                "val_loss": self.val_loss[i],
                "val_mse": self.val_mse[i],
            }
            for i in range(len(self.val_loss))
        ]


def _evaluate(
    model: VaeModel, x: np.ndarray, targets: Optional[np.ndarray], hyper: TrainingHyperparams
) -> Tuple[float, float]:
    noise = np.zeros((len(x), model.latent_dim))
    terms = model.loss(x, noise, targets, hyper.beta, hyper.property_weight)
    return terms.total, terms.mse


def train(
    model: VaeModel,
    train_x: np.ndarray,
    val_x: np.ndarray,
    hyper: TrainingHyperparams,
    seed: int,
    train_targets: Optional[np.ndarray] = None,
    val_targets: Optional[np.ndarray] = None,
) -> Tuple[VaeModel, TrainingHistory]:
    """
    Train a copy of the model; the input model is left untouched.

    Validation losses are computed with zero noise (z = mu). The weights with the
    lowest validation loss are returned. If a loss or update turns non-finite,
    training stops and the last finite weights are returned with
    ``history.diverged`` set.

    Args:
        model: Initial model
        train_x: Normalized training inputs
        val_x: Normalized validation inputs
        hyper: Optimizer settings
        seed: Seed for shuffling and reparameterization noise
        train_targets: Storage scores for the property head
        val_targets: Validation storage scores

    Returns:
        Tuple of (trained model, loss history)
    """
    train_x = np.atleast_2d(np.asarray(train_x, dtype=float))
    val_x = np.atleast_2d(np.asarray(val_x, dtype=float))
    if len(train_x) == 0 or len(val_x) == 0:
        raise ModelError("Training and validation sets must be non-empty")
    if (train_targets is None) != (val_targets is None):
        raise ModelError("Provide targets for both training and validation sets or neither")

    rng = np.random.default_rng(seed)
    current = model.copy()
    velocity = {k: np.zeros_like(v) for k, v in current.params.items()}
    history = TrainingHistory()
    best: Optional[VaeModel] = None
    best_val = np.inf
    n = len(train_x)

    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        batch_totals, batch_mses = [], []
        for start in range(0, n, hyper.batch_size):
            idx = order[start : start + hyper.batch_size]
            noise = rng.standard_normal((len(idx), current.latent_dim))
            targets = None if train_targets is None else train_targets[idx]
            terms, grads = current.loss_and_grads(
                train_x[idx], noise, targets, hyper.beta, hyper.property_weight
            )
            if not np.isfinite(terms.total) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                history.diverged = True
                break
            updated = {}
            for name in PARAMETER_NAMES:
                velocity[name] = hyper.momentum * velocity[name] - hyper.learning_rate * grads[name]
                updated[name] = current.params[name] + velocity[name]
            if not all(np.all(np.isfinite(v)) for v in updated.values()):
                history.diverged = True
                break
            current.params = updated
            batch_totals.append(terms.total)
            batch_mses.append(terms.mse)
        if history.diverged:
            history.message = f"loss became non-finite in epoch {epoch + 1}"
            logger.error(f"Training diverged in epoch {epoch + 1}; keeping last finite weights")
            break

        val_total, val_mse = _evaluate(current, val_x, val_targets, hyper)
        if not np.isfinite(val_total):
            history.diverged = True
            history.message = f"validation loss became non-finite in epoch {epoch + 1}"
            logger.error(history.message)
            break
        history.train_loss.append(float(np.mean(batch_totals)))
        history.train_mse.append(float(np.mean(batch_mses)))
        history.val_loss.append(val_total)
        history.val_mse.append(val_mse)
        if val_total < best_val:
            best_val = val_total
            best = current.copy()
            history.best_epoch = epoch + 1
        if (epoch + 1) % 50 == 0:
            logger.debug(f"epoch {epoch + 1}: train {history.train_loss[-1]:.5f}, val {val_total:.5f}")

    final = current if history.diverged or best is None else best
    logger.info(
        f"Trained {len(history.val_loss)} epochs, best epoch {history.best_epoch}, "
        f"best validation loss {best_val:.5f}"
    )
    return final, history


def _numeric_gradient(loss: Callable[[], float], array: np.ndarray, epsilon: float) -> np.ndarray:
    grad = np.zeros_like(array)
    for index in np.ndindex(array.shape):
        original = array[index]
        array[index] = original + epsilon
        up = loss()
        array[index] = original - epsilon
        down = loss()
        array[index] = original
        grad[index] = (up - down) / (2.0 * epsilon)
    return grad


def gradient_check(
    model: VaeModel,
    x: np.ndarray,
    epsilon: float = 1e-5,
    noise: Optional[np.ndarray] = None,
    targets: Optional[np.ndarray] = None,
    beta: float = 1.0,
    property_weight: float = 1.0,
    analytic: Optional[Dict[str, np.ndarray]] = None,
) -> float:
    """
    Largest relative error between analytic and central-difference gradients.

    Relative error is |a - n| / max(|a| + |n|, GRADIENT_CHECK_FLOOR) over every
    weight. ``analytic`` overrides the model's own gradients.
    """
    if not 0.0 < epsilon <= 1e-2:
        raise ModelError(f"epsilon must lie in (0, 1e-2], got {epsilon}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if noise is None:
        noise = np.zeros((len(x), model.latent_dim))
    trial = model.copy()
    if analytic is None:
        _, analytic = trial.loss_and_grads(x, noise, targets, beta, property_weight)

    def total() -> float:
        return trial.loss(x, noise, targets, beta, property_weight).total

    worst = 0.0
    for name in PARAMETER_NAMES:
        numeric = _numeric_gradient(total, trial.params[name], epsilon)
        a = analytic[name]
        denominator = np.maximum(np.abs(a) + np.abs(numeric), GRADIENT_CHECK_FLOOR)
        worst = max(worst, float(np.max(np.abs(a - numeric) / denominator)))
    return worst
