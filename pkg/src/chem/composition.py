"""
Chemical compositions and formula parsing.

Formulas are element+count tokens with at most one parenthesized group carrying a
multiplier, e.g. ``Li3B3H6``, ``Ti1H2`` or ``Ca(BH4)2``. ``N`` is always nitrogen.
"""

from functools import reduce
from math import gcd
from typing import Dict, FrozenSet, Iterable, Tuple
import re

from pydantic import BaseModel, ConfigDict, field_validator

from src.chem.periodic_table import HYDROGEN_WEIGHT, PERIODIC_TABLE, is_element
from src.errors import FormulaError

_TOKEN_RE = re.compile(r"([A-Z][a-z]?)(\d*)|(\()|\)(\d*)")


class Composition(BaseModel):
    """Element symbol to positive atom count, in first-appearance order."""

    model_config = ConfigDict(frozen=True)

    counts: Dict[str, int]

    @field_validator("counts")
    @classmethod
    def validate_counts(cls, v: Dict[str, int]) -> Dict[str, int]:
        if not v:
            raise FormulaError("Composition must contain at least one element")
        for symbol, count in v.items():
            if not is_element(symbol):
                raise FormulaError(f"Unknown element symbol: {symbol!r}")
            if count < 1:
                raise FormulaError(f"Atom count for {symbol} must be >= 1, got {count}")
        return v

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.counts.items())))

    def __str__(self) -> str:
        return format_formula(self)

    @property
    def elements(self) -> FrozenSet[str]:
        return frozenset(self.counts)

    @property
    def total_atoms(self) -> int:
        return sum(self.counts.values())

    def count(self, symbol: str) -> int:
        return self.counts.get(symbol, 0)

    def reduced(self) -> "Composition":
        return reduced_ratio(self)

    def __add__(self, other: "Composition") -> "Composition":
        merged = dict(self.counts)
        for symbol, count in other.counts.items():
            merged[symbol] = merged.get(symbol, 0) + count
        return Composition(counts=merged)


def composition_from_pairs(pairs: Iterable[Tuple[str, int]]) -> Composition:
    """Sum (symbol, count) pairs into a composition."""
    counts: Dict[str, int] = {}
    for symbol, count in pairs:
        counts[symbol] = counts.get(symbol, 0) + count
    return Composition(counts=counts)


def _parse_count(digits: str, position: int, text: str) -> int:
    if not digits:
        return 1
    value = int(digits)
    if value == 0:
        raise FormulaError(f"Zero count at position {position} in {text!r}")
    return value


def parse_formula(text: str) -> Composition:
    """
    Parse a chemical formula into a composition.

    Args:
        text: Formula string without whitespace

    Returns:
        Composition with repeated elements summed
    """
    if not text:
        raise FormulaError("Empty formula")

    counts: Dict[str, int] = {}
    group: Dict[str, int] = {}
    in_group = False
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise FormulaError(f"Unexpected character {text[pos]!r} at position {pos} in {text!r}")
        symbol, digits, open_paren, close_digits = match.groups()

        if open_paren:
            if in_group:
                raise FormulaError(f"Nested parentheses are not supported: {text!r}")
            in_group = True
            group = {}
        elif symbol is None:
            if not in_group:
                raise FormulaError(f"Unbalanced ')' at position {pos} in {text!r}")
            if not group:
                raise FormulaError(f"Empty parenthesized group in {text!r}")
            multiplier = _parse_count(close_digits, pos, text)
            for element, count in group.items():
                counts[element] = counts.get(element, 0) + count * multiplier
            in_group = False
        else:
            if not is_element(symbol):
                raise FormulaError(f"Unknown element symbol {symbol!r} in {text!r}")
            target = group if in_group else counts
            target[symbol] = target.get(symbol, 0) + _parse_count(digits, pos, text)
        pos = match.end()

    if in_group:
        raise FormulaError(f"Unbalanced '(' in {text!r}")
    return Composition(counts=counts)


def format_formula(c: Composition, explicit_ones: bool = False) -> str:
    """Render a composition; counts of 1 are omitted unless ``explicit_ones``."""
    return "".join(
        f"{symbol}{count}" if count != 1 or explicit_ones else symbol
        for symbol, count in c.counts.items()
    )


def molar_mass(c: Composition) -> float:
    """Molar mass in g/mol."""
    return sum(count * PERIODIC_TABLE[symbol].standard_atomic_weight
               for symbol, count in c.counts.items())


def hydrogen_weight_fraction(c: Composition) -> float:
    """Mass fraction of hydrogen, W_H2, in [0, 1]."""
    hydrogen = c.count("H")
    if hydrogen == 0:
        return 0.0
    return min(1.0, hydrogen * HYDROGEN_WEIGHT / molar_mass(c))


def reduced_ratio(c: Composition) -> Composition:
    """Divide all counts by their greatest common divisor."""
    divisor = reduce(gcd, c.counts.values())
    if divisor == 1:
        return c
    return Composition(counts={symbol: count // divisor for symbol, count in c.counts.items()})
