"""
Unit tests for the CIF reader and writer.
"""

import pytest

from src.cif import Lattice, Site, Structure, parse_cif, site_count, structure_density, write_cif
from src.cif.parser import wrap_fractional
from src.errors import CifError

TIH2_CIF = """\
# TiH2 test cell
data_TiH2
_symmetry_space_group_name_H-M   'P 1'
_cell_length_a   3.0
_cell_length_b   3.0
_cell_length_c   4.4(2)
_cell_angle_alpha   90
_cell_angle_beta   90
_cell_angle_gamma   90
loop_
 _atom_site_label
 _atom_site_type_symbol
 _atom_site_fract_x
 _atom_site_fract_y
 _atom_site_fract_z
 Ti1 Ti 0.0 0.0 0.0
 H1 H 0.25 0.25 0.25
 H2 H 0.75 0.75 0.75(3)
"""


def test_parse_tih2():
    """Cell, sites and uncertainties parse."""
    s = parse_cif(TIH2_CIF)
    assert s.lattice.c == pytest.approx(4.4)
    assert site_count(s) == 3
    assert s.composition.counts == {"Ti": 1, "H": 2}
    assert s.source_id == "TiH2"
    assert s.sites[0].label == "Ti1"


def test_labels_only():
    """Element falls back to the label when type_symbol is absent."""
    text = TIH2_CIF.replace(" _atom_site_type_symbol\n", "").replace(" Ti1 Ti ", " Ti1 ").replace(
        " H1 H ", " H1 "
    ).replace(" H2 H ", " H2 ")
    s = parse_cif(text)
    assert [site.element for site in s.sites] == ["Ti", "H", "H"]


def test_missing_cell_tag():
    """The six cell tags are mandatory."""
    with pytest.raises(CifError, match="_cell_angle_gamma"):
        parse_cif(TIH2_CIF.replace("_cell_angle_gamma   90\n", ""))


def test_malformed_loop():
    """A loop whose values do not fill its columns is rejected."""
    with pytest.raises(CifError, match="Malformed loop"):
        parse_cif(TIH2_CIF + " Ti2 Ti 0.5\n")


@pytest.mark.parametrize(
    "old,new",
    [(" Ti1 Ti 0.0 ", " Ti1 Ti 1e999 "), ("_cell_length_a   3.0", "_cell_length_a   1e999")],
)
def test_non_finite_numbers_rejected(old, new):
    """Overflowing numbers are a CIF error, not an arithmetic failure."""
    with pytest.raises(CifError, match="Non-finite"):
        parse_cif(TIH2_CIF.replace(old, new))


def test_models_reject_non_finite_values():
    with pytest.raises(ValueError):
        Site(element="Ti", x=float("inf"), y=0.0, z=0.0)
    with pytest.raises(ValueError):
        Lattice(a=float("inf"), b=3, c=3, alpha=90, beta=90, gamma=90)


def test_no_data_block():
    with pytest.raises(CifError):
        parse_cif("_cell_length_a 3.0\n")


def test_roundtrip_tih2(tih2_structure):
    """Write then parse reproduces the structure."""
    again = parse_cif(write_cif(tih2_structure))
    assert again.is_close(tih2_structure)


def test_write_records_provenance(tih2_structure):
    """Provenance is written as a comment."""
    tagged = tih2_structure.model_copy(update={"provenance": "template-derived:hyd-0001"})
    text = write_cif(tagged)
    assert "# provenance: template-derived:hyd-0001" in text
    assert parse_cif(text).is_close(tih2_structure)


@pytest.mark.parametrize("value,expected", [(1.25, 0.25), (-0.25, 0.75), (1.0, 0.0), (0.5, 0.5)])
def test_wrap_fractional(value, expected):
    """Fractional coordinates wrap into [0, 1)."""
    assert wrap_fractional(value) == pytest.approx(expected)


def test_is_close_periodic():
    """Coordinates near 0 and 1 compare as neighbors."""
    lattice = Lattice(a=3, b=3, c=3, alpha=90, beta=90, gamma=90)
    a = Structure(lattice=lattice, sites=[Site(element="Ti", x=0.9999999, y=0, z=0)])
    b = Structure(lattice=lattice, sites=[Site(element="Ti", x=0.0, y=0, z=0)])
    assert a.is_close(b, tol=1e-6)


def test_structure_density(tih2_structure):
    """Density follows molar mass over cell volume."""
    expected = (47.867 + 2 * 1.008) * 1.66053907 / (3.0 * 3.0 * 4.4)
    assert structure_density(tih2_structure) == pytest.approx(expected)


def test_structure_requires_sites():
    lattice = Lattice(a=3, b=3, c=3, alpha=90, beta=90, gamma=90)
    with pytest.raises(ValueError):
        Structure(lattice=lattice, sites=[])
