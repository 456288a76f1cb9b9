"""
Constraint-based causal discovery: CI tests, skeleton search, FCI and PAGs.
"""

from .ci_tests import CiTester, CiTestResult, chi_square_ci, fisher_z_ci, replay_removals
from .discovery import (
    NeighborAnnotation,
    apply_orientation_rules,
    fci,
    neighborhood,
    orient_v_structures,
    pc_skeleton,
    possible_d_sep,
)
from .graph import Mark, PartialAncestralGraph

__all__ = [
    "CiTestResult",
    "CiTester",
    "Mark",
    "NeighborAnnotation",
    "PartialAncestralGraph",
    "apply_orientation_rules",
    "chi_square_ci",
    "fci",
    "fisher_z_ci",
    "neighborhood",
    "orient_v_structures",
    "pc_skeleton",
    "possible_d_sep",
    "replay_removals",
]
