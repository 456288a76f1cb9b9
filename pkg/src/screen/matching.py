"""
Matching candidates against a reference database.

A candidate reaches the strongest of three match levels against any database
entry: the same formula, the same reduced element ratio, or the same element set.
Cumulative accuracy curves report, for every prefix of a ranked list, the fraction
of candidates reaching at least each level.
"""

from enum import Enum
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple
import logging

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from src.chem.composition import Composition, parse_formula, reduced_ratio
from src.errors import MissingInputError, SchemaError, ScreeningError
from src.models.material import MaterialRecord

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["n", "same_formula_rate", "same_ratio_rate", "same_elements_rate"]


class MatchKind(str, Enum):
    SAME_FORMULA = "SameFormula"
    SAME_RATIO = "SameRatio"
    SAME_ELEMENTS = "SameElements"
    NO_MATCH = "NoMatch"

    @property
    def level(self) -> int:
        """3 for SameFormula down to 0 for NoMatch."""
        return {"SameFormula": 3, "SameRatio": 2, "SameElements": 1, "NoMatch": 0}[self.value]


class MatchClass(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: MatchKind
    matched_id: Optional[str] = None

    @property
    def same_formula(self) -> bool:
        return self.value.level >= 3

    @property
    def same_ratio(self) -> bool:
        return self.value.level >= 2

    @property
    def same_elements(self) -> bool:
        return self.value.level >= 1


class ReferenceDatabase:
    """Ordered (id, composition) entries of known materials."""

    def __init__(self, entries: Iterable[Tuple[str, Composition]]):
        self.entries: List[Tuple[str, Composition]] = list(entries)

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def from_records(cls, records: Sequence[MaterialRecord]) -> "ReferenceDatabase":
        return cls((r.id, r.formula) for r in records)

    @classmethod
    def from_csv(cls, path: Path) -> "ReferenceDatabase":
        """Load a CSV with ``id`` and ``formula`` columns."""
        path = Path(path)
        if not path.exists():
            raise MissingInputError(f"Reference database not found: {path}")
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        missing = {"id", "formula"} - set(frame.columns)
        if missing:
            raise SchemaError(f"{path}: missing columns {sorted(missing)}")
        db = cls((row.id, parse_formula(row.formula)) for row in frame.itertuples(index=False))
        logger.info(f"Loaded {len(db)} reference entries from {path}")
        return db


def match_classify(candidate: Composition, db: ReferenceDatabase) -> MatchClass:
    """
    Strongest match of a candidate against the database.

    Args:
        candidate: Candidate composition
        db: Reference database

    Returns:
        MatchClass with the first database id reaching that level
    """
    ratio = reduced_ratio(candidate)
    first_ratio: Optional[str] = None
    first_elements: Optional[str] = None
    for entry_id, composition in db.entries:
        if composition == candidate:
            return MatchClass(value=MatchKind.SAME_FORMULA, matched_id=entry_id)
        if first_ratio is None and reduced_ratio(composition) == ratio:
            first_ratio = entry_id
        if first_elements is None and composition.elements == candidate.elements:
            first_elements = entry_id
    if first_ratio is not None:
        return MatchClass(value=MatchKind.SAME_RATIO, matched_id=first_ratio)
    if first_elements is not None:
        return MatchClass(value=MatchKind.SAME_ELEMENTS, matched_id=first_elements)
    return MatchClass(value=MatchKind.NO_MATCH)


def accuracy_curves(classes: Sequence[MatchClass]) -> pd.DataFrame:
    """Cumulative match rates over every prefix of an already-ranked list."""
    if not classes:
        raise ScreeningError("Cannot compute accuracy curves for an empty list")
    levels = np.array([c.value.level for c in classes])
    n = np.arange(1, len(levels) + 1)
    return pd.DataFrame(
        {
            "n": n,
            "same_formula_rate": np.cumsum(levels >= 3) / n,
            "same_ratio_rate": np.cumsum(levels >= 2) / n,
            "same_elements_rate": np.cumsum(levels >= 1) / n,
        },
        columns=CURVE_COLUMNS,
    )


def cumulative_accuracy(ranked: Sequence[Composition], db: ReferenceDatabase) -> pd.DataFrame:
    """
    Classify a ranked list against the database and build the three curves.

    Returns:
        DataFrame with columns n, same_formula_rate, same_ratio_rate, same_elements_rate
    """
    return accuracy_curves([match_classify(c, db) for c in ranked])
