"""
Synthetic hydride database.

Generates structurally valid hydrogen-bearing records with a plausible link
between composition, formation energy, density and band gap. Used as the bundled
fixture when the original database is not available.
"""

from typing import Dict, List
import logging

import numpy as np

from src.chem.composition import Composition, hydrogen_weight_fraction
from src.cif.parser import Lattice, Site, Structure, structure_density
from src.models.material import MaterialRecord

logger = logging.getLogger(__name__)

# Rough per-element contribution to formation energy (eV/atom) when hydrogenated
HYDRIDE_AFFINITY: Dict[str, float] = {
    "Li": -0.60, "Na": -0.35, "K": -0.30, "Mg": -0.55, "Ca": -0.65, "Al": -0.20,
    "Ti": -0.50, "V": -0.30, "Zr": -0.60, "Ni": -0.10, "Pd": -0.15, "Sc": -0.70,
    "Y": -0.75, "La": -0.70, "B": -0.15, "Si": -0.05, "N": -0.20,
}
METALS = ("Li", "Na", "K", "Mg", "Ca", "Al", "Ti", "V", "Zr", "Ni", "Pd", "Sc", "Y", "La")
LIGHT_PARTNERS = ("B", "Si", "N")
MAX_ATOMS = 20
VOLUME_PER_ATOM = 11.0


def _composition(rng: np.random.Generator) -> Composition:
    n_species = int(rng.choice([1, 2, 3], p=[0.45, 0.4, 0.15]))
    species: List[str] = [str(rng.choice(METALS))]
    while len(species) < n_species:
        pool = LIGHT_PARTNERS if rng.random() < 0.3 else METALS
        candidate = str(rng.choice(pool))
        if candidate not in species:
            species.append(candidate)

    counts = {symbol: int(rng.integers(1, 5)) for symbol in species}
    heavy = sum(counts.values())
    counts["H"] = int(rng.integers(1, 2 * heavy + 1))
    while sum(counts.values()) > MAX_ATOMS:
        largest = max(counts, key=lambda symbol: counts[symbol])
        counts[largest] -= 1
    return Composition(counts=counts)


def _structure(composition: Composition, record_id: str, rng: np.random.Generator) -> Structure:
    n_atoms = composition.total_atoms
    a = (n_atoms * VOLUME_PER_ATOM) ** (1.0 / 3.0) * rng.uniform(0.95, 1.05)
    lattice = Lattice(
        a=round(a, 4),
        b=round(a * rng.uniform(0.9, 1.1), 4),
        c=round(a * rng.uniform(0.9, 1.1), 4),
        alpha=90.0,
        beta=90.0,
        gamma=round(float(rng.choice([90.0, 120.0])), 1),
    )
    sites = []
    for symbol, count in composition.counts.items():
        for _ in range(count):
            x, y, z = np.round(rng.random(3), 4)
            sites.append(Site(element=symbol, x=x, y=y, z=z))
    return Structure(lattice=lattice, sites=sites, source_id=record_id, provenance="synthetic")


def synthesize_records(n: int, seed: int = 0) -> List[MaterialRecord]:
    """
    Generate ``n`` synthetic hydride records that all satisfy the training criteria.

    Args:
        n: Number of records
        seed: Random seed

    Returns:
        Records with ids ``hyd-0001`` .. in generation order
    """
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        record_id = f"hyd-{i + 1:04d}"
        composition = _composition(rng)
        structure = _structure(composition, record_id, rng)

        heavy = {s: c for s, c in composition.counts.items() if s != "H"}
        heavy_total = sum(heavy.values())
        h_fraction = composition.count("H") / composition.total_atoms
        affinity = sum(count * HYDRIDE_AFFINITY[s] for s, count in heavy.items()) / heavy_total
        e_form = -0.05 + affinity * (0.6 + 0.8 * h_fraction) + rng.normal(0.0, 0.06)
        e_form = float(np.clip(e_form, -1.5, -0.001))

        w_h2 = hydrogen_weight_fraction(composition)
        band_gap = float(max(0.0, 0.5 + 40.0 * w_h2 + rng.normal(0.0, 0.3)))

        records.append(
            MaterialRecord(
                id=record_id,
                formula=composition,
                structure=structure,
                e_form=round(e_form, 4),
                energy_above_hull=round(float(rng.uniform(0.0, 0.08)), 4),
                density=round(structure_density(structure), 4),
                band_gap=round(band_gap, 4),
                w_h2=w_h2,
                f_character=round(composition.count("La") / composition.total_atoms, 4),
            )
        )
    logger.info(f"Synthesized {n} hydride records (seed {seed})")
    return records
