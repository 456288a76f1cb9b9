"""
Static periodic table for Z = 1..103.

Conventional atomic weights (g/mol), group numbers and metal classification used
by mass arithmetic and the group-based screening rules.
"""

from typing import Dict, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import FormulaError

HYDROGEN_WEIGHT = 1.008

METALLOIDS = frozenset({"B", "Si", "Ge", "As", "Sb", "Te"})
NON_METALS = frozenset(
    {"H", "He", "C", "N", "O", "F", "Ne", "P", "S", "Cl", "Ar", "Se", "Br", "Kr", "I", "Xe",
     "At", "Rn"}
)

# (symbol, weight, group); group 0 marks the lanthanide (57-71) and actinide (89-103) series
_ELEMENTS: Tuple[Tuple[str, float, int], ...] = (
    ("H", 1.008, 1), ("He", 4.0026, 18),
    ("Li", 6.94, 1), ("Be", 9.0122, 2), ("B", 10.81, 13), ("C", 12.011, 14),
    ("N", 14.007, 15), ("O", 15.999, 16), ("F", 18.998, 17), ("Ne", 20.180, 18),
    ("Na", 22.990, 1), ("Mg", 24.305, 2), ("Al", 26.982, 13), ("Si", 28.085, 14),
    ("P", 30.974, 15), ("S", 32.06, 16), ("Cl", 35.45, 17), ("Ar", 39.948, 18),
    ("K", 39.098, 1), ("Ca", 40.078, 2), ("Sc", 44.956, 3), ("Ti", 47.867, 4),
    ("V", 50.942, 5), ("Cr", 51.996, 6), ("Mn", 54.938, 7), ("Fe", 55.845, 8),
    ("Co", 58.933, 9), ("Ni", 58.693, 10), ("Cu", 63.546, 11), ("Zn", 65.38, 12),
    ("Ga", 69.723, 13), ("Ge", 72.630, 14), ("As", 74.922, 15), ("Se", 78.971, 16),
    ("Br", 79.904, 17), ("Kr", 83.798, 18),
    ("Rb", 85.468, 1), ("Sr", 87.62, 2), ("Y", 88.906, 3), ("Zr", 91.224, 4),
    ("Nb", 92.906, 5), ("Mo", 95.95, 6), ("Tc", 98.0, 7), ("Ru", 101.07, 8),
    ("Rh", 102.91, 9), ("Pd", 106.42, 10), ("Ag", 107.87, 11), ("Cd", 112.41, 12),
    ("In", 114.82, 13), ("Sn", 118.71, 14), ("Sb", 121.76, 15), ("Te", 127.60, 16),
    ("I", 126.90, 17), ("Xe", 131.29, 18),
    ("Cs", 132.91, 1), ("Ba", 137.33, 2),
    ("La", 138.91, 0), ("Ce", 140.12, 0), ("Pr", 140.91, 0), ("Nd", 144.24, 0),
    ("Pm", 145.0, 0), ("Sm", 150.36, 0), ("Eu", 151.96, 0), ("Gd", 157.25, 0),
    ("Tb", 158.93, 0), ("Dy", 162.50, 0), ("Ho", 164.93, 0), ("Er", 167.26, 0),
    ("Tm", 168.93, 0), ("Yb", 173.05, 0), ("Lu", 174.97, 0),
    ("Hf", 178.49, 4), ("Ta", 180.95, 5), ("W", 183.84, 6), ("Re", 186.21, 7),
    ("Os", 190.23, 8), ("Ir", 192.22, 9), ("Pt", 195.08, 10), ("Au", 196.97, 11),
    ("Hg", 200.59, 12), ("Tl", 204.38, 13), ("Pb", 207.2, 14), ("Bi", 208.98, 15),
    ("Po", 209.0, 16), ("At", 210.0, 17), ("Rn", 222.0, 18),
    ("Fr", 223.0, 1), ("Ra", 226.0, 2),
    ("Ac", 227.0, 0), ("Th", 232.04, 0), ("Pa", 231.04, 0), ("U", 238.03, 0),
    ("Np", 237.0, 0), ("Pu", 244.0, 0), ("Am", 243.0, 0), ("Cm", 247.0, 0),
    ("Bk", 247.0, 0), ("Cf", 251.0, 0), ("Es", 252.0, 0), ("Fm", 257.0, 0),
    ("Md", 258.0, 0), ("No", 259.0, 0), ("Lr", 262.0, 0),
)

CapClass = Literal["g16", "g15", "g14", "g13", "metal"]


class ElementInfo(BaseModel):
    """Static classification record of one element."""

    model_config = ConfigDict(frozen=True)

    symbol: str
    atomic_number: int = Field(ge=1, le=103)
    standard_atomic_weight: float = Field(gt=0.0)
    group: Optional[int] = Field(None, ge=1, le=18)
    series: Optional[Literal["lanthanide", "actinide"]] = None
    is_metal: bool
    is_metalloid: bool = False

    @model_validator(mode="after")
    def check_group_or_series(self) -> "ElementInfo":
        if (self.group is None) == (self.series is None):
            raise ValueError(f"{self.symbol}: exactly one of group or series must be set")
        return self


def _build_table() -> Dict[str, ElementInfo]:
    table: Dict[str, ElementInfo] = {}
    for z, (symbol, weight, group) in enumerate(_ELEMENTS, start=1):
        series = None
        if group == 0:
            series = "lanthanide" if z < 89 else "actinide"
        table[symbol] = ElementInfo(
            symbol=symbol,
            atomic_number=z,
            standard_atomic_weight=weight,
            group=group or None,
            series=series,
            is_metal=symbol not in NON_METALS and symbol not in METALLOIDS,
            is_metalloid=symbol in METALLOIDS,
        )
    return table


PERIODIC_TABLE: Dict[str, ElementInfo] = _build_table()


def is_element(symbol: str) -> bool:
    """Whether ``symbol`` is a recognized element symbol."""
    return symbol in PERIODIC_TABLE


def classify(symbol: str, metalloids_as_metals: bool = False) -> ElementInfo:
    """
    Look up the classification record of an element.

    Args:
        symbol: Case-sensitive element symbol
        metalloids_as_metals: Report metalloids (B, Si, Ge, As, Sb, Te) as metals

    Returns:
        ElementInfo for the symbol
    """
    try:
        info = PERIODIC_TABLE[symbol]
    except KeyError:
        raise FormulaError(f"Unknown element symbol: {symbol!r}") from None
    if metalloids_as_metals and info.is_metalloid:
        return info.model_copy(update={"is_metal": True})
    return info


def cap_class(symbol: str, metalloids_as_metals: bool = False) -> Optional[CapClass]:
    """
    Hydrogen-capacity class of an element.

    Groups 13 to 16 take precedence over metal status, so Al and Sn are capped by
    their group. Hydrogen and the remaining non-metals have no class.
    """
    if symbol == "H":
        return None
    info = classify(symbol, metalloids_as_metals)
    if info.group in (13, 14, 15, 16):
        return f"g{info.group}"  # type: ignore[return-value]
    if info.is_metal:
        return "metal"
    return None
