"""
Minimal CIF reader and writer.

Supports the subset needed to count atomic sites and carry lattice metadata:
one ``data_`` block, the six cell tags and an ``_atom_site`` loop with element
and fractional coordinates. Only P1 is represented; symmetry operations in input
files are ignored and sites are taken as listed.
"""

from math import cos, floor, isfinite, radians, sqrt
from typing import Dict, List, Optional, Tuple
import logging
import re

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.chem.composition import Composition, composition_from_pairs, molar_mass
from src.chem.periodic_table import is_element
from src.errors import CifError

logger = logging.getLogger(__name__)

AVOGADRO_DENSITY_FACTOR = 1.66053907  # g/mol per Å^3 -> g/cm^3

CELL_TAGS = (
    "_cell_length_a",
    "_cell_length_b",
    "_cell_length_c",
    "_cell_angle_alpha",
    "_cell_angle_beta",
    "_cell_angle_gamma",
)

_TOKEN_RE = re.compile(r"'[^']*'|\"[^\"]*\"|\S+")
_NUMBER_RE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?:\(\d+\))?$")


def wrap_fractional(value: float) -> float:
    """Map a fractional coordinate into [0, 1)."""
    wrapped = value - floor(value)
    return 0.0 if wrapped >= 1.0 else wrapped


class Lattice(BaseModel):
    """Cell lengths in Å and angles in degrees."""

    model_config = ConfigDict(frozen=True)

    a: float = Field(gt=0.0, allow_inf_nan=False)
    b: float = Field(gt=0.0, allow_inf_nan=False)
    c: float = Field(gt=0.0, allow_inf_nan=False)
    alpha: float = Field(gt=0.0, lt=180.0)
    beta: float = Field(gt=0.0, lt=180.0)
    gamma: float = Field(gt=0.0, lt=180.0)

    @property
    def volume(self) -> float:
        ca, cb, cg = (cos(radians(angle)) for angle in (self.alpha, self.beta, self.gamma))
        radicand = 1.0 - ca * ca - cb * cb - cg * cg + 2.0 * ca * cb * cg
        return self.a * self.b * self.c * sqrt(max(radicand, 0.0))

    def as_tuple(self) -> Tuple[float, float, float, float, float, float]:
        return (self.a, self.b, self.c, self.alpha, self.beta, self.gamma)


class Site(BaseModel):
    """One atomic site in fractional coordinates."""

    model_config = ConfigDict(frozen=True)

    element: str
    x: float = Field(allow_inf_nan=False)
    y: float = Field(allow_inf_nan=False)
    z: float = Field(allow_inf_nan=False)
    label: Optional[str] = None

    @field_validator("element")
    @classmethod
    def validate_element(cls, v: str) -> str:
        if not is_element(v):
            raise ValueError(f"Unknown element symbol: {v!r}")
        return v

    @field_validator("x", "y", "z")
    @classmethod
    def wrap_coordinate(cls, v: float) -> float:
        return wrap_fractional(v)


class Structure(BaseModel):
    """Lattice plus atomic sites of a crystal in the P1 setting."""

    lattice: Lattice
    sites: List[Site]
    source_id: Optional[str] = None
    provenance: Optional[str] = None

    @model_validator(mode="after")
    def check_sites(self) -> "Structure":
        if not self.sites:
            raise ValueError("Structure must contain at least one site")
        return self

    @property
    def composition(self) -> Composition:
        if not self.sites:
            raise CifError("Structure has no sites")
        return composition_from_pairs((site.element, 1) for site in self.sites)

    def is_close(self, other: "Structure", tol: float = 1e-6) -> bool:
        """Equal lattice and sites within ``tol``, comparing coordinates periodically."""
        if len(self.sites) != len(other.sites):
            return False
        if any(abs(p - q) > tol for p, q in zip(self.lattice.as_tuple(), other.lattice.as_tuple())):
            return False
        for mine, theirs in zip(self.sites, other.sites):
            if mine.element != theirs.element:
                return False
            for p, q in ((mine.x, theirs.x), (mine.y, theirs.y), (mine.z, theirs.z)):
                delta = abs(p - q)
                if min(delta, 1.0 - delta) > tol:
                    return False
        return True


def site_count(s: Structure) -> int:
    """Number of listed atomic sites."""
    return len(s.sites)


def structure_density(s: Structure) -> float:
    """Mass density in g/cm^3."""
    return molar_mass(s.composition) * AVOGADRO_DENSITY_FACTOR / s.lattice.volume


def _parse_number(token: str, tag: str) -> float:
    match = _NUMBER_RE.match(token)
    if match is None:
        raise CifError(f"Non-numeric value {token!r} for {tag}")
    value = float(match.group(1))
    if not isfinite(value):
        raise CifError(f"Non-finite value {token!r} for {tag}")
    return value


def _element_from_label(token: str) -> str:
    letters = re.match(r"[A-Za-z]+", token)
    if letters is None:
        raise CifError(f"Cannot derive element from atom site {token!r}")
    text = letters.group(0)
    candidate = text[:2].capitalize()
    if len(candidate) == 2 and is_element(candidate):
        return candidate
    if is_element(text[0].upper()):
        return text[0].upper()
    raise CifError(f"Unknown element in atom site {token!r}")


def _tokenize(text: str) -> Tuple[str, List[str]]:
    """Split the first data block into tokens; returns (block name, tokens)."""
    block_name: Optional[str] = None
    tokens: List[str] = []
    in_text_field = False
    blocks = 0

    for line in text.splitlines():
        if line.startswith(";"):
            in_text_field = not in_text_field
            if not in_text_field and blocks == 1:
                tokens.append("<text>")
            continue
        if in_text_field:
            continue
        for token in _TOKEN_RE.findall(line):
            if token.startswith("#"):
                break
            if token.lower().startswith("data_"):
                blocks += 1
                if blocks == 1:
                    block_name = token[5:]
                continue
            if blocks == 1:
                tokens.append(token.strip("'\"") if token[0] in "'\"" else token)

    if block_name is None:
        raise CifError("No data_ block found")
    if blocks > 1:
        logger.warning(f"CIF contains {blocks} data blocks; only '{block_name}' is read")
    return block_name, tokens


def _collect_items(tokens: List[str]) -> Tuple[Dict[str, str], List[Tuple[List[str], List[List[str]]]]]:
    items: Dict[str, str] = {}
    loops: List[Tuple[List[str], List[List[str]]]] = []
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if token.lower() == "loop_":
            i += 1
            headers: List[str] = []
            while i < len(tokens) and tokens[i].startswith("_"):
                headers.append(tokens[i].lower())
                i += 1
            values: List[str] = []
            while i < len(tokens) and not tokens[i].startswith("_") and tokens[i].lower() != "loop_":
                values.append(tokens[i])
                i += 1
            if not headers:
                raise CifError("loop_ without column tags")
            if len(values) % len(headers) != 0:
                raise CifError(
                    f"Malformed loop over {headers[0]}: {len(values)} values for "
                    f"{len(headers)} columns"
                )
            rows = [values[j:j + len(headers)] for j in range(0, len(values), len(headers))]
            loops.append((headers, rows))
        elif token.startswith("_"):
            if i + 1 >= len(tokens):
                raise CifError(f"Tag {token} has no value")
            items[token.lower()] = tokens[i + 1]
            i += 2
        else:
            raise CifError(f"Unexpected token {token!r}")
    return items, loops


def parse_cif(text: str) -> Structure:
    """
    Parse a CIF data block into a Structure.

    Args:
        text: CIF file contents

    Returns:
        Structure with lattice and all sites in file order
    """
    block_name, tokens = _tokenize(text)
    items, loops = _collect_items(tokens)

    cell = []
    for tag in CELL_TAGS:
        if tag not in items:
            raise CifError(f"Missing mandatory tag {tag}")
        cell.append(_parse_number(items[tag], tag))

    atom_loop = next((loop for loop in loops if "_atom_site_fract_x" in loop[0]), None)
    if atom_loop is None:
        raise CifError("Missing _atom_site loop with fractional coordinates")
    headers, rows = atom_loop
    for tag in ("_atom_site_fract_y", "_atom_site_fract_z"):
        if tag not in headers:
            raise CifError(f"Missing mandatory tag {tag}")
    if "_atom_site_type_symbol" in headers:
        element_col = headers.index("_atom_site_type_symbol")
    elif "_atom_site_label" in headers:
        element_col = headers.index("_atom_site_label")
    else:
        raise CifError("Atom site loop has neither _atom_site_type_symbol nor _atom_site_label")
    label_col = headers.index("_atom_site_label") if "_atom_site_label" in headers else None
    x_col, y_col, z_col = (headers.index(f"_atom_site_fract_{axis}") for axis in "xyz")

    sites = []
    for row_no, row in enumerate(rows, start=1):
        try:
            sites.append(
                Site(
                    element=_element_from_label(row[element_col]),
                    x=_parse_number(row[x_col], "_atom_site_fract_x"),
                    y=_parse_number(row[y_col], "_atom_site_fract_y"),
                    z=_parse_number(row[z_col], "_atom_site_fract_z"),
                    label=row[label_col] if label_col is not None else None,
                )
            )
        except CifError as e:
            raise CifError(f"Atom site row {row_no}: {e}") from e

    try:
        lattice = Lattice(a=cell[0], b=cell[1], c=cell[2], alpha=cell[3], beta=cell[4], gamma=cell[5])
        return Structure(lattice=lattice, sites=sites, source_id=block_name or None)
    except ValueError as e:
        raise CifError(f"Invalid structure in block '{block_name}': {e}") from e


def write_cif(s: Structure) -> str:
    """
    Emit a Structure as a P1 CIF block with 6 fractional digits.

    Args:
        s: Structure to serialize

    Returns:
        CIF text
    """
    if not s.sites:
        raise CifError("Cannot write a structure without sites")

    name = re.sub(r"\s+", "_", s.source_id) if s.source_id else "structure"
    lines = [f"data_{name}"]
    if s.provenance:
        lines.append(f"# provenance: {s.provenance}")
    lines.append("_symmetry_space_group_name_H-M   'P 1'")
    for tag, value in zip(CELL_TAGS, s.lattice.as_tuple()):
        lines.append(f"{tag}   {value:.6f}")
    lines.extend([
        "loop_",
        " _atom_site_label",
        " _atom_site_type_symbol",
        " _atom_site_fract_x",
        " _atom_site_fract_y",
        " _atom_site_fract_z",
    ])
    per_element: Dict[str, int] = {}
    for site in s.sites:
        per_element[site.element] = per_element.get(site.element, 0) + 1
        label = f"{site.element}{per_element[site.element]}"
        lines.append(f" {label} {site.element} {site.x:.6f} {site.y:.6f} {site.z:.6f}")
    return "\n".join(lines) + "\n"
