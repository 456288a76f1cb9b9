"""
Dataset ingestion, training-set selection, splitting and discretization.
"""

from .manager import DatasetManager, RowDiagnostic, load_records, save_records
from .selection import (
    SplitSpec,
    apply_training_criteria,
    discretize,
    discretize_frame,
    records_to_frame,
    rejection_reason,
    split,
    split_indices,
)
from .synthetic import synthesize_records

__all__ = [
    "DatasetManager",
    "RowDiagnostic",
    "SplitSpec",
    "apply_training_criteria",
    "discretize",
    "discretize_frame",
    "load_records",
    "records_to_frame",
    "rejection_reason",
    "save_records",
    "split",
    "split_indices",
    "synthesize_records",
]
