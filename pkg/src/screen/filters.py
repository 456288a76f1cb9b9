"""
Candidate Filter

Rule-based screening of generated compositions. Rules run in a fixed order and
the first failing rule is reported.
"""

from typing import Callable, Iterable, List, Mapping, Optional, Tuple
import logging

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.chem.composition import Composition, format_formula
from src.chem.periodic_table import NON_METALS, cap_class, classify
from src.utils.config import Settings

logger = logging.getLogger(__name__)

ONLY_LIGHT_NON_METALS = frozenset({"N", "O", "S", "P", "Se", "H"})
MIN_SCORE_RULE = "min_score"
CAP_CLASS_RULES = (("g16", "R1"), ("g15", "R2"), ("g14", "R3"), ("g13", "R4"), ("metal", "R5"))

RuleCheck = Callable[[Composition], Optional[str]]


class FilterConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    strict_metal_cap: bool = False
    soft_metal_cap: int = Field(6, ge=2)
    restrict_element_count: bool = False
    metalloids_as_metals: bool = False
    min_score: float = Field(0.0, ge=0.0, le=1.0)

    @classmethod
    def from_settings(cls, settings: Settings) -> "FilterConfig":
        return cls(
            strict_metal_cap=settings.strict_metal_cap,
            soft_metal_cap=settings.soft_metal_cap,
            min_score=settings.min_score,
            restrict_element_count=settings.restrict_element_count,
            metalloids_as_metals=settings.metalloids_as_metals,
        )


class FilterVerdict(BaseModel):
    """Outcome of screening one candidate."""

    model_config = ConfigDict(frozen=True)

    candidate_id: str
    formula: str
    kept: bool
    failed_rule: Optional[str] = None
    detail: str = ""

    @model_validator(mode="after")
    def check_rule(self) -> "FilterVerdict":
        if self.kept == (self.failed_rule is not None):
            raise ValueError("a verdict is kept exactly when no rule failed")
        return self


class CandidateFilter:
    """
    Screens compositions against the hydrogen-capacity and element rules.

    R1-R5 cap the hydrogen count per capacity class (group 16, 15, 14, 13, metals);
    caps of the classes present add up. Metals allow 2 H per atom under the strict
    cap and ``soft_metal_cap`` otherwise. R6-R10 reject element sets. A candidate
    that passes them all is still dropped when its score is below ``min_score``.
    """

    def __init__(self, config: Optional[FilterConfig] = None):
        self.config = config or FilterConfig()
        self._setup_rules()

    def _setup_rules(self):
        """Set up the ordered rule table."""
        self.rules: List[Tuple[str, str, RuleCheck]] = [
            ("R1-R5", "hydrogen capacity", self._check_capacity),
            ("R6", "only N, O, S, P, Se and H", self._check_light_non_metals),
            ("R7", "only non-metals and H", self._check_all_non_metal),
            ("R8", "at least one metal", self._check_has_metal),
            ("R9", "no group-17 element", self._check_halogen),
        ]
        if self.config.restrict_element_count:
            self.rules.append(("R10", "3 or 4 distinct non-H elements", self._check_element_count))

    def _class_cap(self, klass: str, n: int) -> float:
        if klass == "g16":
            return 2 * n
        if klass == "g15":
            return n + 2
        if klass == "g14":
            return 2 * n + 2
        if klass == "g13":
            # strict H < 2n
            return 2 * n - 1
        if self.config.strict_metal_cap:
            return 2 * n
        return self.config.soft_metal_cap * n

    def _check_capacity(self, c: Composition) -> Optional[str]:
        hydrogen = c.count("H")
        per_class = {}
        for el, n in c.counts.items():
            klass = cap_class(el, self.config.metalloids_as_metals)
            if klass is not None:
                per_class[klass] = per_class.get(klass, 0) + n
        if not per_class:
            return None
        cap = sum(self._class_cap(k, n) for k, n in per_class.items())
        if hydrogen <= cap:
            return None
        blamed = next(rule for klass, rule in CAP_CLASS_RULES if klass in per_class)
        classes = ", ".join(k for k, _ in CAP_CLASS_RULES if k in per_class)
        return f"{blamed}: H{hydrogen} exceeds combined cap {cap:g} for classes {classes}"

    def _check_light_non_metals(self, c: Composition) -> Optional[str]:
        if c.elements <= ONLY_LIGHT_NON_METALS:
            return "R6: composed only of N, O, S, P, Se and H"
        return None

    def _check_all_non_metal(self, c: Composition) -> Optional[str]:
        if all(el in NON_METALS for el in c.elements):
            return "R7: composed only of non-metals and H"
        return None

    def _check_has_metal(self, c: Composition) -> Optional[str]:
        if not any(classify(el, self.config.metalloids_as_metals).is_metal for el in c.elements):
            return "R8: no metal element"
        return None

    def _check_halogen(self, c: Composition) -> Optional[str]:
        halogens = sorted(el for el in c.elements if classify(el).group == 17)
        if halogens:
            return f"R9: contains group-17 element(s) {', '.join(halogens)}"
        return None

    def _check_element_count(self, c: Composition) -> Optional[str]:
        distinct = len(c.elements - {"H"})
        if distinct not in (3, 4):
            return f"R10: {distinct} distinct non-H elements"
        return None

    def evaluate(
        self, candidate_id: str, composition: Composition, score: Optional[float] = None
    ) -> FilterVerdict:
        """
        Run the rules on one composition.

        Args:
            candidate_id: Identifier carried into the verdict
            composition: Candidate composition
            score: Storage score; the threshold is skipped when absent

        Returns:
            FilterVerdict naming the first failing rule, if any
        """
        formula = format_formula(composition)
        for _, _, check in self.rules:
            failure = check(composition)
            if failure is not None:
                rule, _, detail = failure.partition(": ")
                return FilterVerdict(
                    candidate_id=candidate_id, formula=formula, kept=False, failed_rule=rule, detail=detail
                )
        if score is not None and score < self.config.min_score:
            return FilterVerdict(
                candidate_id=candidate_id,
                formula=formula,
                kept=False,
                failed_rule=MIN_SCORE_RULE,
                detail=f"score {score:.4f} below minimum {self.config.min_score:g}",
            )
        return FilterVerdict(candidate_id=candidate_id, formula=formula, kept=True)


def apply_filters(
    candidates: Iterable[Tuple[str, Composition]],
    config: Optional[FilterConfig] = None,
    scores: Optional[Mapping[str, float]] = None,
) -> List[FilterVerdict]:
    """
    Verdict per (id, composition) pair, in input order.

    ``scores`` maps candidate ids to storage scores for the minimum-score check.
    """
    screen = CandidateFilter(config)
    scores = scores or {}
    verdicts = [screen.evaluate(cid, comp, scores.get(cid)) for cid, comp in candidates]
    kept = sum(v.kept for v in verdicts)
    logger.info(f"Filters kept {kept} of {len(verdicts)} candidates")
    return verdicts
