"""
Data models for material records.
"""

from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.chem.composition import Composition, format_formula, hydrogen_weight_fraction, parse_formula
from src.cif.parser import Structure, site_count

W_H2_TOLERANCE = 1e-6


class MaterialRecord(BaseModel):
    """One row of the hydride database."""

    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    formula: Composition
    structure: Optional[Structure] = None
    e_form: float
    energy_above_hull: Optional[float] = Field(None, ge=0.0)
    density: Optional[float] = Field(None, gt=0.0)
    band_gap: Optional[float] = Field(None, ge=0.0)
    w_h2: float = Field(ge=0.0, le=1.0)
    score: Optional[float] = Field(None, ge=0.0, le=1.0)
    f_character: Optional[float] = Field(None, ge=0.0, le=1.0)
    extra: Dict[str, float] = Field(default_factory=dict)

    @field_validator("formula", mode="before")
    @classmethod
    def parse_formula_text(cls, v: Any) -> Any:
        if isinstance(v, str):
            return parse_formula(v)
        return v

    @model_validator(mode="before")
    @classmethod
    def derive_w_h2(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("w_h2") is None and data.get("formula") is not None:
            formula = data["formula"]
            composition = parse_formula(formula) if isinstance(formula, str) else formula
            if isinstance(composition, Composition):
                data = {**data, "w_h2": hydrogen_weight_fraction(composition)}
        return data

    @model_validator(mode="after")
    def check_w_h2(self) -> "MaterialRecord":
        expected = hydrogen_weight_fraction(self.formula)
        if abs(self.w_h2 - expected) > W_H2_TOLERANCE:
            raise ValueError(
                f"w_h2 {self.w_h2} inconsistent with formula {self.formula_text} ({expected:.6f})"
            )
        return self

    @property
    def formula_text(self) -> str:
        return format_formula(self.formula)

    @property
    def site_count(self) -> Optional[int]:
        return site_count(self.structure) if self.structure is not None else None
