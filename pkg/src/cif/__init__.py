"""
CIF subset parsing and emission.
"""

from .parser import Lattice, Site, Structure, parse_cif, site_count, structure_density, write_cif

__all__ = ["Lattice", "Site", "Structure", "parse_cif", "site_count", "structure_density", "write_cif"]
