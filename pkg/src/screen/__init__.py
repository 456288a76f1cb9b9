"""
Screening: rule-based filters, ranking and reference-database matching.
"""

from .filters import CandidateFilter, FilterConfig, FilterVerdict, apply_filters
from .matching import (
    MatchClass,
    MatchKind,
    ReferenceDatabase,
    accuracy_curves,
    cumulative_accuracy,
    match_classify,
)
from .ranking import ScoredCandidate, rank, top_k

__all__ = [
    "CandidateFilter",
    "FilterConfig",
    "FilterVerdict",
    "MatchClass",
    "MatchKind",
    "ReferenceDatabase",
    "ScoredCandidate",
    "accuracy_curves",
    "apply_filters",
    "cumulative_accuracy",
    "match_classify",
    "rank",
    "top_k",
]
