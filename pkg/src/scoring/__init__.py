"""
Hydrogen storage scoring, formation energies and error statistics.
"""

from .energy import (
    EnergyBreakdown,
    EnergyComponent,
    ScoredMaterial,
    ScoreVariant,
    e_factor,
    e_factor_curve,
    e_factor_modified,
    e_factor_original,
    formation_energy,
    h_storage_score,
    score_material,
)
from .metrics import ErrorStats, error_stats, mae_discrepancy, squared_error

__all__ = [
    "EnergyBreakdown",
    "EnergyComponent",
    "ErrorStats",
    "ScoreVariant",
    "ScoredMaterial",
    "e_factor",
    "e_factor_curve",
    "e_factor_modified",
    "e_factor_original",
    "error_stats",
    "formation_energy",
    "h_storage_score",
    "mae_discrepancy",
    "score_material",
    "squared_error",
]
