"""
Prediction error statistics.
"""

from math import isfinite
from typing import Iterable, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from src.errors import ScoringError


class ErrorStats(BaseModel):
    """Mean squared and mean absolute error over prediction/reference pairs."""

    mse: float = Field(ge=0.0)
    mae: float = Field(ge=0.0)
    n: int = Field(ge=1)

    def rounded(self, decimals: int = 3) -> "ErrorStats":
        return ErrorStats(mse=round(self.mse, decimals), mae=round(self.mae, decimals), n=self.n)


def squared_error(pred: float, ref: float) -> float:
    """(pred - ref)^2."""
    if not (isfinite(pred) and isfinite(ref)):
        raise ScoringError(f"Non-finite energy pair ({pred}, {ref})")
    return (pred - ref) ** 2


def error_stats(pairs: Iterable[Tuple[float, float]]) -> ErrorStats:
    """
    Error statistics of (predicted, reference) pairs.

    Args:
        pairs: Non-empty sequence of (pred, ref) energies

    Returns:
        ErrorStats with mse, mae and n
    """
    values = np.asarray(list(pairs), dtype=float)
    if values.size == 0:
        raise ScoringError("error_stats needs at least one pair")
    if values.ndim != 2 or values.shape[1] != 2:
        raise ScoringError("error_stats expects (pred, ref) pairs")
    if not np.all(np.isfinite(values)):
        raise ScoringError("error_stats received non-finite values")
    diff = values[:, 0] - values[:, 1]
    return ErrorStats(mse=float(np.mean(diff ** 2)), mae=float(np.mean(np.abs(diff))), n=len(diff))


def mae_discrepancy(stats: ErrorStats, stated_mae: Optional[float], label: str = "") -> str:
    """
    Note comparing a recomputed MAE with a separately stated value.

    Returns an empty string when no stated value is given or they agree to
    three decimals.
    """
    if stated_mae is None:
        return ""
    recomputed = round(stats.mae, 3)
    if abs(recomputed - stated_mae) < 5e-4:
        return ""
    prefix = f"{label}: " if label else ""
    return (
        f"{prefix}recomputed MAE {recomputed:.3f} over {stats.n} pairs differs from the stated "
        f"MAE {stated_mae}; reporting the recomputed value (MSE {stats.mse:.4f})"
    )
