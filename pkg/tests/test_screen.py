"""
Tests for candidate filters, ranking and reference matching.
"""

from pathlib import Path

import numpy as np
import pytest

from src.chem.composition import parse_formula
from src.errors import MissingInputError, SchemaError, ScreeningError
from src.screen import (
    CandidateFilter,
    FilterConfig,
    MatchClass,
    MatchKind,
    ReferenceDatabase,
    ScoredCandidate,
    accuracy_curves,
    apply_filters,
    cumulative_accuracy,
    match_classify,
    rank,
    top_k,
)

REFERENCE_DB = Path(__file__).resolve().parent.parent / "data" / "reference_db.csv"


@pytest.fixture
def reference_db():
    return ReferenceDatabase.from_csv(REFERENCE_DB)


def _verdict(formula: str, **config):
    return CandidateFilter(FilterConfig(**config)).evaluate("c", parse_formula(formula))


@pytest.mark.parametrize(
    "formula,rule",
    [
        ("SH6", "R1"),
        ("PH6", "R2"),
        ("AlH3", "R4"),
        ("S2H2", "R6"),
        ("CH4", "R7"),
        ("SiH4", "R8"),
        ("KHF2", "R9"),
    ],
)
def test_rejections(formula, rule):
    """Each composition fails at the expected rule."""
    verdict = _verdict(formula)

    assert not verdict.kept
    assert verdict.failed_rule == rule
    assert verdict.detail


def test_capacity_caps_add_up():
    """Group caps of all classes present are summed; the first class takes the blame."""
    assert _verdict("MgSH4", strict_metal_cap=True).kept
    verdict = _verdict("MgSH5", strict_metal_cap=True)
    assert verdict.failed_rule == "R1"
    assert "cap 4" in verdict.detail


def test_metal_cap_is_optional():
    assert _verdict("TiH3").kept
    assert _verdict("TiH3", strict_metal_cap=True).failed_rule == "R5"


@pytest.mark.parametrize(
    "formula,rule",
    [("LiSH20", "R1"), ("NaPH30", "R2"), ("MgSiH40", "R3"), ("LiB3H15", "R4")],
)
def test_group_caps_apply_next_to_metals(formula, rule):
    """A metal widens the combined cap by a finite amount under default settings."""
    verdict = _verdict(formula)

    assert not verdict.kept
    assert verdict.failed_rule == rule


def test_soft_metal_cap():
    assert _verdict("TiH6").kept
    assert _verdict("TiH7").failed_rule == "R5"
    assert _verdict("TiH7", soft_metal_cap=8).kept


def test_min_score_threshold():
    """The score threshold applies after the composition rules."""
    screen = CandidateFilter(FilterConfig(min_score=0.02))
    assert screen.evaluate("a", parse_formula("TiH2"), 0.04).kept
    low = screen.evaluate("b", parse_formula("TiH2"), 0.01)
    assert low.failed_rule == "min_score"
    assert "below minimum 0.02" in low.detail
    assert screen.evaluate("c", parse_formula("SH6"), 0.01).failed_rule == "R1"
    assert screen.evaluate("d", parse_formula("TiH2")).kept


def test_apply_filters_with_scores(dft_candidates):
    scores = {r.id: r.extra["stated_score"] for r in dft_candidates}
    verdicts = apply_filters(
        ((r.id, r.formula) for r in dft_candidates), FilterConfig(min_score=0.03), scores
    )
    kept = [v.candidate_id for v in verdicts if v.kept]
    assert kept == ["dft-01", "dft-02", "dft-03", "dft-04", "dft-05"]


def test_metalloids_as_metals():
    assert _verdict("SiH4", metalloids_as_metals=True).kept


def test_bundled_candidates_pass_default_filters(dft_candidates):
    verdicts = apply_filters((r.id, r.formula) for r in dft_candidates)

    assert [v.candidate_id for v in verdicts] == [r.id for r in dft_candidates]
    assert all(v.kept for v in verdicts)


def test_element_count_restriction():
    """With the restriction on, 3 or 4 distinct non-H elements are required."""
    assert _verdict("Ca2Al1Si2H3", restrict_element_count=True).kept
    assert _verdict("TiH2", restrict_element_count=True).failed_rule == "R10"
    assert _verdict("TiH2").kept


def test_filter_config_from_settings(test_settings):
    config = FilterConfig.from_settings(test_settings.model_copy(update={"strict_metal_cap": True}))
    assert config.strict_metal_cap
    assert not config.restrict_element_count


def _candidate(cid: str, formula: str, score: float, w_h2: float) -> ScoredCandidate:
    return ScoredCandidate(id=cid, composition=parse_formula(formula), e_form=-0.1, w_h2=w_h2, score=score)


def test_rank_orders_by_score_then_weight_then_formula():
    candidates = [
        _candidate("a", "TiH2", 0.04, 0.04),
        _candidate("b", "MgH2", 0.04, 0.04),
        _candidate("c", "LiH", 0.04, 0.12),
        _candidate("d", "NaH", 0.06, 0.04),
    ]
    assert [c.id for c in rank(candidates)] == ["d", "c", "b", "a"]


def test_rank_keeps_input_order_for_complete_ties():
    candidates = [_candidate(cid, "TiH2", 0.04, 0.04) for cid in ("p", "q", "r")]
    assert [c.id for c in rank(candidates)] == ["p", "q", "r"]
    assert rank([]) == []


def test_rank_bundled_candidates(dft_candidates):
    """Li3B3H6 scores highest and Ti4Ni1H4 lowest."""
    scored = [ScoredCandidate.from_energy(r.id, r.formula, r.e_form) for r in dft_candidates]
    ranked = rank(scored)

    assert ranked[0].formula == "Li3B3H6"
    assert ranked[-1].id == "dft-10"
    assert all(a.score >= b.score for a, b in zip(ranked, ranked[1:]))


def test_top_k_edges():
    ranked = [_candidate(str(i), "TiH2", 0.1, 0.04) for i in range(3)]

    assert top_k(ranked, 0) == []
    assert top_k(ranked, 10) == ranked
    assert [c.id for c in top_k(ranked, 2)] == ["0", "1"]
    with pytest.raises(ScreeningError):
        top_k(ranked, -1)


@pytest.mark.parametrize(
    "formula,kind,matched",
    [
        ("Ti1H2", MatchKind.SAME_FORMULA, "mp-1077482"),
        ("Ti2H4", MatchKind.SAME_RATIO, "mp-1077482"),
        ("Ti3H4", MatchKind.SAME_ELEMENTS, "mp-1077482"),
        ("Ti4Ni1H4", MatchKind.SAME_ELEMENTS, "mp-1071458"),
        ("Ti8H6", MatchKind.SAME_RATIO, "mp-1078123"),
        ("LiAlH4", MatchKind.NO_MATCH, None),
    ],
)
def test_match_classify(reference_db, formula, kind, matched):
    result = match_classify(parse_formula(formula), reference_db)

    assert result.value == kind
    assert result.matched_id == matched


def test_match_levels_are_nested():
    same_ratio = MatchClass(value=MatchKind.SAME_RATIO)
    assert not same_ratio.same_formula
    assert same_ratio.same_ratio and same_ratio.same_elements
    assert not MatchClass(value=MatchKind.NO_MATCH).same_elements


def test_reference_database_errors(tmp_path):
    bad = tmp_path / "db.csv"
    bad.write_text("id,name\nx,TiH2\n", encoding="utf-8")

    with pytest.raises(SchemaError):
        ReferenceDatabase.from_csv(bad)
    with pytest.raises(MissingInputError):
        ReferenceDatabase.from_csv(tmp_path / "absent.csv")


def test_accuracy_at_twenty():
    """5 same-formula, 2 same-ratio, 12 same-element and 1 unmatched candidates."""
    kinds = (
        [MatchKind.SAME_FORMULA] * 5
        + [MatchKind.SAME_RATIO] * 2
        + [MatchKind.SAME_ELEMENTS] * 12
        + [MatchKind.NO_MATCH]
    )
    curves = accuracy_curves([MatchClass(value=k) for k in kinds])
    last = curves.iloc[-1]

    assert last["n"] == 20
    assert last["same_formula_rate"] == pytest.approx(0.25)
    assert last["same_ratio_rate"] == pytest.approx(0.35)
    assert last["same_elements_rate"] == pytest.approx(0.95)


def test_accuracy_curves_match_recount(rng):
    """Every prefix rate equals a direct count, and the curves are nested."""
    kinds = list(MatchKind)
    classes = [MatchClass(value=kinds[i]) for i in rng.integers(0, 4, size=60)]
    curves = accuracy_curves(classes)

    for n in (1, 7, 33, 60):
        prefix = classes[:n]
        row = curves.iloc[n - 1]
        assert row["same_formula_rate"] == pytest.approx(sum(c.same_formula for c in prefix) / n)
        assert row["same_ratio_rate"] == pytest.approx(sum(c.same_ratio for c in prefix) / n)
        assert row["same_elements_rate"] == pytest.approx(sum(c.same_elements for c in prefix) / n)
    assert np.all(curves["same_formula_rate"] <= curves["same_ratio_rate"])
    assert np.all(curves["same_ratio_rate"] <= curves["same_elements_rate"])


def test_accuracy_curves_empty():
    with pytest.raises(ScreeningError):
        accuracy_curves([])


def test_cumulative_accuracy_on_bundled_candidates(dft_candidates, reference_db):
    curves = cumulative_accuracy([r.formula for r in dft_candidates], reference_db)

    assert len(curves) == 10
    assert list(curves.columns) == ["n", "same_formula_rate", "same_ratio_rate", "same_elements_rate"]
    # dft-03 (Ti1H2) is the first exact match
    assert curves["same_formula_rate"].iloc[2] == pytest.approx(1 / 3)
