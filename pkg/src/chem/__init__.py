"""
Chemistry primitives: periodic table, compositions and formula parsing.
"""

from .composition import (
    Composition,
    composition_from_pairs,
    format_formula,
    hydrogen_weight_fraction,
    molar_mass,
    parse_formula,
    reduced_ratio,
)
from .periodic_table import PERIODIC_TABLE, ElementInfo, cap_class, classify, is_element

__all__ = [
    "Composition",
    "ElementInfo",
    "PERIODIC_TABLE",
    "cap_class",
    "classify",
    "composition_from_pairs",
    "format_formula",
    "hydrogen_weight_fraction",
    "is_element",
    "molar_mass",
    "parse_formula",
    "reduced_ratio",
]
