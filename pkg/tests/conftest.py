"""
Test configuration and fixtures for the hydride discovery pipeline.
"""

from pathlib import Path

import numpy as np
import pytest

from src.cif.parser import Lattice, Site, Structure
from src.dataset import load_records, synthesize_records
from src.models.material import MaterialRecord
from src.utils.config import Settings

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = REPO_ROOT / "data"
TEST_DATA_DIR = Path(__file__).resolve().parent / "data"


@pytest.fixture
def test_settings(tmp_path):
    """Settings writing into a temporary output root."""
    return Settings(
        output_root=tmp_path / "runs",
        log_level="DEBUG",
        seed=7,
    )


@pytest.fixture
def fast_settings(tmp_path):
    """Small model and generation sizes for end-to-end runs."""
    return Settings(
        output_root=tmp_path / "runs",
        log_level="WARNING",
        seed=11,
        synthetic_records=60,
        latent_dim=3,
        hidden_dim=12,
        property_hidden_dim=6,
        epochs=15,
        batch_size=16,
        n_generate=40,
        latent_steps=50,
        trajectory_every=10,
        top_k=10,
        max_condition_size=1,
    )


@pytest.fixture
def dft_candidates():
    """Generated candidates with predicted and DFT formation energies."""
    return load_records(DATA_DIR / "candidates_vs_dft.csv", strict=True)


@pytest.fixture
def mp_candidates():
    """Generated candidates with predicted and Materials Project formation energies."""
    return load_records(DATA_DIR / "candidates_vs_mp.csv", strict=True)


@pytest.fixture(scope="session")
def synthetic_450():
    """The bundled 450-record synthetic fixture."""
    return synthesize_records(450, seed=42)


@pytest.fixture
def tih2_structure():
    """Rutile-like TiH2 cell."""
    return Structure(
        lattice=Lattice(a=3.0, b=3.0, c=4.4, alpha=90.0, beta=90.0, gamma=90.0),
        sites=[
            Site(element="Ti", x=0.0, y=0.0, z=0.0),
            Site(element="H", x=0.25, y=0.25, z=0.25),
            Site(element="H", x=0.75, y=0.75, z=0.75),
        ],
        source_id="tih2",
    )


@pytest.fixture
def tih2_record(tih2_structure):
    return MaterialRecord(
        id="tih2",
        formula="TiH2",
        structure=tih2_structure,
        e_form=-0.466,
        energy_above_hull=0.0,
        density=3.75,
        band_gap=0.0,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
