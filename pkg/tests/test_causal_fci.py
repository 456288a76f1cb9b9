"""
Tests for skeleton search, FCI orientation and PAG handling.
"""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.causal import (
    Mark,
    PartialAncestralGraph,
    apply_orientation_rules,
    fci,
    neighborhood,
    orient_v_structures,
    pc_skeleton,
)
from src.errors import CausalDiscoveryError

TEST_DATA_DIR = Path(__file__).resolve().parent / "data"

TARGET = "H Storage Score"


def _collider(seed: int, n: int = 10_000) -> pd.DataFrame:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    y = rng.normal(size=n)
    return pd.DataFrame({"x": x, "y": y, "z": x + y + 0.5 * rng.normal(size=n)})


def _chain(seed: int, n: int = 10_000) -> pd.DataFrame:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    y = x + 0.5 * rng.normal(size=n)
    return pd.DataFrame({"x": x, "y": y, "z": y + 0.5 * rng.normal(size=n)})


@pytest.fixture
def reference_pag():
    return PartialAncestralGraph.from_text(
        (TEST_DATA_DIR / "fci_reference_graph.txt").read_text(encoding="utf-8")
    )


def test_collider_is_oriented():
    """x -> z <- y is recovered as x *-> z <-* y in most replications."""
    hits = 0
    for seed in range(100):
        pag = fci(_collider(seed), alpha=0.05, test="fisher-z")
        if (
            not pag.is_adjacent("x", "y")
            and pag.is_adjacent("x", "z")
            and pag.is_adjacent("y", "z")
            and pag.mark("x", "z") == Mark.ARROW
            and pag.mark("y", "z") == Mark.ARROW
        ):
            hits += 1
    assert hits >= 90


def test_chain_skeleton():
    """The chain skeleton drops x - z with sepset {y} and leaves no collider."""
    hits = 0
    for seed in range(100):
        pag = fci(_chain(seed), alpha=0.05, test="fisher-z")
        if pag.adjacency_pairs() == {frozenset(("x", "y")), frozenset(("y", "z"))}:
            assert pag.sepset("x", "z") == ("y",)
            assert pag.mark("x", "y") == Mark.CIRCLE
            hits += 1
    assert hits >= 90


def test_skeleton_on_independent_variables():
    rng = np.random.default_rng(0)
    frame = pd.DataFrame(rng.integers(0, 3, size=(400, 3)), columns=["a", "b", "c"])
    graph, sepsets = pc_skeleton(frame, alpha=0.001)

    assert graph.adjacency_pairs() == set()
    assert sepsets[frozenset(("a", "b"))] == ()


def test_fci_edge_cases():
    """Single and empty variable sets."""
    single = fci(pd.DataFrame({"a": [1, 2, 3]}))
    assert single.nodes == ["a"]
    assert single.adjacency_pairs() == set()

    with pytest.raises(CausalDiscoveryError):
        fci(pd.DataFrame())


def test_fci_is_deterministic():
    frame = _collider(4)
    assert fci(frame, test="fisher-z").to_text() == fci(frame, test="fisher-z").to_text()


def test_v_structure_respects_sepset():
    skeleton = PartialAncestralGraph(["a", "b", "c"])
    skeleton.add_edge("a", "b")
    skeleton.add_edge("b", "c")

    collider = orient_v_structures(skeleton, {frozenset(("a", "c")): ()})
    chain = orient_v_structures(skeleton, {frozenset(("a", "c")): ("b",)})

    assert collider.mark("a", "b") == Mark.ARROW and collider.mark("c", "b") == Mark.ARROW
    assert chain.mark("a", "b") == Mark.CIRCLE


def test_rule_one_propagates_arrow():
    """a *-> b o-o c with a, c non-adjacent orients b --> c."""
    graph = PartialAncestralGraph(["a", "b", "c"])
    graph.add_edge("a", "b", Mark.CIRCLE, Mark.ARROW)
    graph.add_edge("b", "c")

    apply_orientation_rules(graph)

    assert graph.is_directed("b", "c")
    assert not graph.has_directed_cycle()


def test_pag_text_round_trip(reference_pag):
    """Serialized PAGs parse back to the same graph."""
    assert len(reference_pag.nodes) == 7
    assert len(reference_pag.adjacency_pairs()) == 8
    assert reference_pag.is_bidirected("E_factor", TARGET)
    assert PartialAncestralGraph.from_text(reference_pag.to_text()) == reference_pag


def test_pag_text_rejects_garbage():
    with pytest.raises(CausalDiscoveryError):
        PartialAncestralGraph.from_text("a ==> b\n")


def test_neighborhood_relations(reference_pag):
    """Adjacent nodes are classified by the marks on the connecting edge."""
    relations = {a.node: a.relation for a in neighborhood(reference_pag, TARGET, radius=1)}

    assert relations == {
        "H Wt Frac": "undetermined",
        "E_factor": "confounded",
        "Band Gap": "effect",
    }


def test_neighborhood_radius_two(reference_pag):
    annotations = {a.node: a for a in neighborhood(reference_pag, TARGET, radius=2)}

    assert set(annotations) == {"H Wt Frac", "E_factor", "Band Gap", "E_form", "Density", "f Character"}
    assert annotations["E_form"].distance == 2
    assert annotations["E_form"].relation == "indirect"


def test_neighborhood_errors(reference_pag):
    with pytest.raises(CausalDiscoveryError):
        neighborhood(reference_pag, "Volume")
    with pytest.raises(CausalDiscoveryError):
        neighborhood(reference_pag, TARGET, radius=0)
