"""
Formation-energy weighting and the hydrogen storage score.

The score of a material is E_factor(E_form) x W_H2. E_factor is a half-ellipse
centred at -0.5 eV/atom; the original variant has half-width 0.5 (support
[-1, 0]) and the modified variant half-width 0.7 (support [-1.2, 0.2]).
"""

from enum import Enum
from math import isnan, sqrt
from typing import Callable, Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.chem.composition import Composition, hydrogen_weight_fraction
from src.errors import ScoringError

E_FACTOR_CENTER = -0.5
ORIGINAL_HALF_WIDTH = 0.5
MODIFIED_HALF_WIDTH = 0.7
REPORT_DECIMALS = 3


class ScoreVariant(str, Enum):
    """E_factor definition used for scoring."""

    ORIGINAL = "original"
    MODIFIED = "modified"


def _half_ellipse(e_form: float, half_width: float) -> float:
    if isnan(e_form):
        raise ScoringError("Formation energy is NaN")
    if e_form <= E_FACTOR_CENTER - half_width or e_form >= E_FACTOR_CENTER + half_width:
        return 0.0
    offset = abs(e_form - E_FACTOR_CENTER)
    radicand = 1.0 - (offset / half_width) ** 2
    return sqrt(max(radicand, 0.0))


def e_factor_original(e_form: float) -> float:
    """E_factor with support [-1, 0] eV/atom."""
    return _half_ellipse(e_form, ORIGINAL_HALF_WIDTH)


def e_factor_modified(e_form: float) -> float:
    """E_factor with the widened support [-1.2, 0.2] eV/atom."""
    return _half_ellipse(e_form, MODIFIED_HALF_WIDTH)


E_FACTOR_FUNCTIONS: Dict[ScoreVariant, Callable[[float], float]] = {
    ScoreVariant.ORIGINAL: e_factor_original,
    ScoreVariant.MODIFIED: e_factor_modified,
}


def e_factor(e_form: float, variant: ScoreVariant = ScoreVariant.MODIFIED) -> float:
    return E_FACTOR_FUNCTIONS[ScoreVariant(variant)](e_form)


def h_storage_score(
    e_form: float, w_h2: float, variant: ScoreVariant = ScoreVariant.MODIFIED
) -> float:
    """
    Hydrogen storage score.

    Args:
        e_form: Formation energy in eV/atom
        w_h2: Hydrogen weight fraction in [0, 1]
        variant: E_factor definition

    Returns:
        E_factor(e_form) * w_h2
    """
    if isnan(w_h2) or not 0.0 <= w_h2 <= 1.0:
        raise ScoringError(f"Hydrogen weight fraction must lie in [0, 1], got {w_h2}")
    return e_factor(e_form, variant) * w_h2


class ScoredMaterial(BaseModel):
    """A composition with its formation energy and derived score fields."""

    model_config = ConfigDict(frozen=True)

    composition: Composition
    e_form: float
    w_h2: float = Field(ge=0.0, le=1.0)
    e_factor: float = Field(ge=0.0, le=1.0)
    score: float = Field(ge=0.0, le=1.0)
    variant: ScoreVariant

    @model_validator(mode="after")
    def check_consistency(self) -> "ScoredMaterial":
        if abs(self.score - self.e_factor * self.w_h2) > 1e-12:
            raise ValueError("score must equal e_factor * w_h2")
        if abs(self.e_factor - e_factor(self.e_form, self.variant)) > 1e-12:
            raise ValueError(f"e_factor inconsistent with {self.variant.value} variant")
        return self


def score_material(
    composition: Composition, e_form: float, variant: ScoreVariant = ScoreVariant.MODIFIED
) -> ScoredMaterial:
    """Score a composition from its formation energy."""
    w_h2 = hydrogen_weight_fraction(composition)
    factor = e_factor(e_form, variant)
    return ScoredMaterial(
        composition=composition,
        e_form=e_form,
        w_h2=w_h2,
        e_factor=factor,
        score=factor * w_h2,
        variant=ScoreVariant(variant),
    )


def e_factor_curve(start: float = -1.5, stop: float = 0.5, points: int = 201) -> List[Tuple[float, float, float]]:
    """Tabulate (e_form, original, modified) for plotting."""
    grid = np.linspace(start, stop, points)
    return [(float(e), e_factor_original(float(e)), e_factor_modified(float(e))) for e in grid]


class EnergyComponent(BaseModel):
    """Reference constituent of a formation reaction."""

    model_config = ConfigDict(frozen=True)

    element: str
    moles: float = Field(gt=0.0)
    reference_energy: float


class EnergyBreakdown(BaseModel):
    """Total energy of a phase and the reference energies of its constituents."""

    model_config = ConfigDict(frozen=True)

    e_total: float
    components: List[EnergyComponent]

    @field_validator("components")
    @classmethod
    def check_components(cls, v: List[EnergyComponent]) -> List[EnergyComponent]:
        if not v:
            raise ValueError("Energy breakdown needs at least one component")
        return v

    def per_atom_formation_energy(self) -> float:
        """Formation energy divided by the total moles of constituents."""
        return formation_energy(self) / sum(component.moles for component in self.components)


def formation_energy(b: EnergyBreakdown) -> float:
    """Energy change upon forming the phase from its references: e_total - sum(n_i * E_i)."""
    return b.e_total - sum(c.moles * c.reference_energy for c in b.components)
