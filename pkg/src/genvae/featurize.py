"""
Candidate descriptors for the generative model.

A CandidateVector holds raw element counts over a fixed vocabulary plus the six
lattice descriptors. FeatureSpace owns the vocabulary order and the normalization
that maps vectors to model inputs; both are persisted with the checkpoint.
"""

from typing import Iterable, List, Optional, Sequence, Tuple
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.chem.composition import Composition, hydrogen_weight_fraction
from src.chem.periodic_table import PERIODIC_TABLE
from src.errors import ModelError
from src.models.material import MaterialRecord

logger = logging.getLogger(__name__)

LATTICE_FIELDS = ("a", "b", "c", "alpha", "beta", "gamma")
DEFAULT_LATTICE = (4.0, 4.0, 4.0, 90.0, 90.0, 90.0)


class CandidateVector(BaseModel):
    """Element counts over a vocabulary plus lattice descriptors."""

    model_config = ConfigDict(frozen=True)

    vocab: Tuple[str, ...]
    element_counts: Tuple[float, ...]
    lattice: Tuple[float, float, float, float, float, float] = DEFAULT_LATTICE

    @field_validator("element_counts")
    @classmethod
    def check_counts(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(not np.isfinite(c) or c < 0 for c in v):
            raise ValueError("element counts must be finite and non-negative")
        return v

    @model_validator(mode="after")
    def check_lengths(self) -> "CandidateVector":
        if len(self.vocab) != len(self.element_counts):
            raise ValueError(
                f"{len(self.element_counts)} counts for a vocabulary of {len(self.vocab)}"
            )
        return self

    def rounded(self) -> "CandidateVector":
        counts = tuple(float(c) for c in np.rint(self.element_counts))
        return self.model_copy(update={"element_counts": counts})

    @property
    def is_empty(self) -> bool:
        return not any(round(c) > 0 for c in self.element_counts)

    def composition(self) -> Composition:
        """Integer composition from the rounded counts."""
        counts = {el: int(round(c)) for el, c in zip(self.vocab, self.element_counts) if round(c) > 0}
        if not counts:
            raise ModelError("Candidate has no atoms after rounding")
        return Composition(counts=counts)

    @property
    def w_h2(self) -> float:
        return hydrogen_weight_fraction(self.composition())


class FeatureSpace(BaseModel):
    """Vocabulary plus the normalization between vectors and model arrays."""

    model_config = ConfigDict(frozen=True)

    vocab: Tuple[str, ...] = Field(min_length=1)
    count_scale: float = Field(1.0, gt=0.0)
    lattice_mean: Tuple[float, ...] = DEFAULT_LATTICE
    lattice_std: Tuple[float, ...] = (1.0,) * 6

    @field_validator("vocab")
    @classmethod
    def check_vocab(cls, v: Tuple[str, ...]) -> Tuple[str, ...]:
        unknown = [s for s in v if s not in PERIODIC_TABLE]
        if unknown:
            raise ValueError(f"unknown elements in vocabulary: {unknown}")
        if len(set(v)) != len(v):
            raise ValueError("vocabulary contains duplicates")
        return v

    @field_validator("lattice_std")
    @classmethod
    def check_std(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(v) != 6 or any(s <= 0 for s in v):
            raise ValueError("lattice_std needs six positive entries")
        return v

    @property
    def n_counts(self) -> int:
        return len(self.vocab)

    @property
    def dim(self) -> int:
        return len(self.vocab) + len(LATTICE_FIELDS)

    @classmethod
    def fit(cls, records: Sequence[MaterialRecord], vocab: Optional[Iterable[str]] = None) -> "FeatureSpace":
        """
        Build the vocabulary and normalization from training records.

        The vocabulary is ordered by atomic number unless given explicitly.
        """
        if not records:
            raise ModelError("Cannot fit a feature space on zero records")
        if vocab is None:
            symbols = {el for r in records for el in r.formula.elements}
            vocab = sorted(symbols, key=lambda s: PERIODIC_TABLE[s].atomic_number)
        vocab = tuple(vocab)

        max_count = max(max(r.formula.counts.values()) for r in records)
        lattices = np.array(
            [r.structure.lattice.as_tuple() for r in records if r.structure is not None], dtype=float
        )
        if len(lattices):
            mean = tuple(float(x) for x in lattices.mean(axis=0))
            std = lattices.std(axis=0)
            std = tuple(float(s) if s > 1e-12 else 1.0 for s in std)
        else:
            mean, std = DEFAULT_LATTICE, (1.0,) * 6
        space = cls(vocab=vocab, count_scale=float(max_count), lattice_mean=mean, lattice_std=std)
        logger.info(f"Feature space: {len(vocab)} elements, count scale {max_count}")
        return space

    def encode(self, vectors: Sequence[CandidateVector]) -> np.ndarray:
        """Stack vectors into normalized model inputs, one row each."""
        rows = []
        for v in vectors:
            if v.vocab != self.vocab:
                raise ModelError("Candidate vector vocabulary differs from the feature space")
            counts = np.asarray(v.element_counts, dtype=float) / self.count_scale
            lattice = (np.asarray(v.lattice, dtype=float) - self.lattice_mean) / self.lattice_std
            rows.append(np.concatenate([counts, lattice]))
        if not rows:
            return np.zeros((0, self.dim))
        return np.vstack(rows)

    def decode(self, x: np.ndarray) -> List[CandidateVector]:
        """Undo the normalization; counts stay real-valued until rounded."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dim:
            raise ModelError(f"Expected {self.dim} columns, got {x.shape[1]}")
        counts = np.clip(x[:, : self.n_counts], 0.0, None) * self.count_scale
        lattice = x[:, self.n_counts :] * self.lattice_std + self.lattice_mean
        return [
            CandidateVector(
                vocab=self.vocab,
                element_counts=tuple(float(c) for c in row_counts),
                lattice=tuple(float(p) for p in row_lattice),
            )
            for row_counts, row_lattice in zip(counts, lattice)
        ]


def featurize(record: MaterialRecord, space: FeatureSpace) -> CandidateVector:
    """
    Map a material record onto the feature space vocabulary.

    Args:
        record: Material record with a parsed formula
        space: Fitted feature space

    Returns:
        CandidateVector with raw (unnormalized) counts
    """
    outside = sorted(record.formula.elements - set(space.vocab))
    if outside:
        raise ModelError(f"{record.id}: elements {outside} are not in the vocabulary")
    counts = tuple(float(record.formula.count(el)) for el in space.vocab)
    if record.structure is not None:
        lattice = record.structure.lattice.as_tuple()
    else:
        lattice = tuple(space.lattice_mean)
    return CandidateVector(vocab=space.vocab, element_counts=counts, lattice=lattice)
