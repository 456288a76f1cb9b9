"""
Ranking of scored candidates.
"""

from typing import List, Optional, Sequence, TypeVar

from pydantic import BaseModel, ConfigDict, Field

from src.chem.composition import Composition, format_formula, hydrogen_weight_fraction
from src.errors import ScreeningError
from src.scoring.energy import ScoreVariant, h_storage_score


class ScoredCandidate(BaseModel):
    """A candidate with its estimated formation energy and storage score."""

    model_config = ConfigDict(frozen=True)

    id: str
    composition: Composition
    e_form: float
    w_h2: float = Field(ge=0.0, le=1.0)
    score: float = Field(ge=0.0, le=1.0)
    predicted_score: Optional[float] = None
    template_id: Optional[str] = None

    @property
    def formula(self) -> str:
        return format_formula(self.composition)

    @classmethod
    def from_energy(
        cls,
        candidate_id: str,
        composition: Composition,
        e_form: float,
        variant: ScoreVariant = ScoreVariant.MODIFIED,
        **extra,
    ) -> "ScoredCandidate":
        w = hydrogen_weight_fraction(composition)
        return cls(
            id=candidate_id,
            composition=composition,
            e_form=e_form,
            w_h2=w,
            score=h_storage_score(e_form, w, variant),
            **extra,
        )


T = TypeVar("T", bound=ScoredCandidate)


def rank(candidates: Sequence[T]) -> List[T]:
    """
    Sort by descending score, then descending w_h2, then formula.

    The sort is stable, so complete ties keep their input order.
    """
    return sorted(candidates, key=lambda c: (-c.score, -c.w_h2, c.formula))


def top_k(ranked: Sequence[T], k: int = 100) -> List[T]:
    """First min(k, n) items."""
    if k < 0:
        raise ScreeningError(f"k must be >= 0, got {k}")
    return list(ranked[:k])
