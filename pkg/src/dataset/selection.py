"""
Training-set selection, deterministic splitting and discretization.
"""

from typing import Dict, List, Literal, Optional, Sequence, Tuple
import logging

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.errors import DatasetError
from src.models.material import MaterialRecord
from src.scoring.energy import ScoreVariant, e_factor, h_storage_score

logger = logging.getLogger(__name__)

MAX_SITES = 20
HULL_MAX = 0.08

DiscretizeStrategy = Literal["equal-width", "equal-frequency"]


def rejection_reason(
    record: MaterialRecord, max_sites: int = MAX_SITES, hull_max: float = HULL_MAX
) -> Optional[str]:
    """First violated training criterion of a record, or None when it qualifies."""
    if record.formula.count("H") == 0:
        return "no hydrogen"
    if record.structure is None:
        return "no structure"
    if record.site_count is not None and record.site_count > max_sites:
        return f">{max_sites} sites"
    hull = record.energy_above_hull
    if hull is None or not 0.0 <= hull <= hull_max:
        return f"hull outside [0,{hull_max}]"
    if record.e_form > 0.0:
        return "formation energy > 0"
    return None


def apply_training_criteria(
    records: Sequence[MaterialRecord], max_sites: int = MAX_SITES, hull_max: float = HULL_MAX
) -> Tuple[List[MaterialRecord], List[Tuple[MaterialRecord, str]]]:
    """
    Keep hydrogen-bearing, small, near-hull, exothermic records.

    Args:
        records: Candidate training records
        max_sites: Maximum atomic sites per structure
        hull_max: Maximum energy above hull in eV/atom

    Returns:
        (kept records, [(rejected record, first violated rule)])
    """
    kept: List[MaterialRecord] = []
    rejected: List[Tuple[MaterialRecord, str]] = []
    for record in records:
        reason = rejection_reason(record, max_sites, hull_max)
        if reason is None:
            kept.append(record)
        else:
            rejected.append((record, reason))
    logger.info(f"Training criteria kept {len(kept)} of {len(records)} records")
    return kept, rejected


class SplitSpec(BaseModel):
    """Train/validation/test fractions and shuffle seed."""

    model_config = ConfigDict(frozen=True)

    ratios: Tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0

    @field_validator("ratios")
    @classmethod
    def check_ratios(cls, v: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(not ratio > 0.0 for ratio in v):
            raise ValueError(f"Split ratios must be positive, got {v}")
        if abs(sum(v) - 1.0) > 1e-9:
            raise ValueError(f"Split ratios must sum to 1, got {sum(v)}")
        return v

    def sizes(self, n: int) -> Tuple[int, int, int]:
        """Floor allocation for validation and test; remainder goes to train."""
        n_val = int(np.floor(n * self.ratios[1] + 1e-9))
        n_test = int(np.floor(n * self.ratios[2] + 1e-9))
        return n - n_val - n_test, n_val, n_test


def split(
    records: Sequence[MaterialRecord], spec: SplitSpec
) -> Tuple[List[MaterialRecord], List[MaterialRecord], List[MaterialRecord]]:
    """
    Shuffle by seed and partition into train, validation and test.

    Args:
        records: At least three records
        spec: Ratios and seed

    Returns:
        (train, val, test)
    """
    train_idx, val_idx, test_idx = split_indices(len(records), spec)
    return (
        [records[i] for i in train_idx],
        [records[i] for i in val_idx],
        [records[i] for i in test_idx],
    )


def split_indices(n: int, spec: SplitSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row indices of the train, validation and test partitions of ``n`` items."""
    if n < 3:
        raise DatasetError(f"split needs at least 3 records, got {n}")
    n_train, n_val, _ = spec.sizes(n)
    order = np.random.default_rng(spec.seed).permutation(n)
    return order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:]


def discretize(
    values: Sequence[float], bins: int = 3, strategy: DiscretizeStrategy = "equal-frequency"
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Map a numeric column to ordered bin indices.

    Args:
        values: Numeric column
        bins: Number of bins (>= 2)
        strategy: "equal-width" or "equal-frequency"

    Returns:
        (bin index per value in 0..bins-1, bin edges)
    """
    if bins < 2:
        raise DatasetError(f"discretize needs at least 2 bins, got {bins}")
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        raise DatasetError("Cannot discretize an empty column")
    if not np.all(np.isfinite(data)):
        raise DatasetError("Cannot discretize non-finite values")

    low, high = float(data.min()), float(data.max())
    if strategy == "equal-width":
        edges = np.linspace(low, high, bins + 1)
        if low == high:
            return np.zeros(data.shape, dtype=int), edges
    elif strategy == "equal-frequency":
        if low == high:
            raise DatasetError("Equal-frequency discretization of a constant column")
        edges = np.quantile(data, np.linspace(0.0, 1.0, bins + 1))
    else:
        raise DatasetError(f"Unknown discretization strategy: {strategy!r}")

    interior = np.unique(edges[1:-1])
    codes = np.searchsorted(interior, data, side="right")
    return codes.astype(int), edges


def discretize_frame(
    frame: pd.DataFrame,
    columns: Sequence[str],
    bins: int = 3,
    strategy: DiscretizeStrategy = "equal-frequency",
) -> pd.DataFrame:
    """
    Discretize the named columns of a frame for chi-square testing.

    Columns with no more distinct values than ``bins`` are already categorical
    and are coded by the rank of their value.
    """
    coded: Dict[str, np.ndarray] = {}
    for column in columns:
        values = frame[column].to_numpy(dtype=float)
        distinct = np.unique(values)
        if len(distinct) <= bins:
            coded[column] = np.searchsorted(distinct, values)
        else:
            coded[column], _ = discretize(values, bins, strategy)
    return pd.DataFrame(coded, index=frame.index)


def records_to_frame(
    records: Sequence[MaterialRecord], variant: ScoreVariant = ScoreVariant.MODIFIED
) -> pd.DataFrame:
    """
    Build the analysis frame of a record set.

    Score and E_factor are recomputed from e_form and w_h2 with ``variant``.
    """
    rows = []
    for record in records:
        row = {
            "id": record.id,
            "formula": record.formula_text,
            "e_form": record.e_form,
            "e_factor": e_factor(record.e_form, variant),
            "w_h2": record.w_h2,
            "score": h_storage_score(record.e_form, record.w_h2, variant),
            "density": record.density,
            "band_gap": record.band_gap,
            "f_character": record.f_character,
            "energy_above_hull": record.energy_above_hull,
            "site_count": record.site_count,
        }
        row.update(record.extra)
        rows.append(row)
    return pd.DataFrame(rows)
