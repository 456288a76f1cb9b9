"""
Constraint-based causal discovery.

PC-stable skeleton search, collider orientation and the FCI procedure
(possible-d-separation refinement followed by orientation rules R1-R4 and the
tail rules R8-R10). Selection-bias rules R5-R7 are not applied. Conditioning
sets are enumerated in lexicographic order and the first separating set found
is kept.
"""

from collections import deque
from itertools import combinations
from typing import Dict, List, Optional, Set, Tuple
import logging

import pandas as pd
from pydantic import BaseModel, ConfigDict

from src.causal.ci_tests import CiTester, CiTestName
from src.causal.graph import Mark, PartialAncestralGraph, Sepsets
from src.errors import CausalDiscoveryError

logger = logging.getLogger(__name__)


def pc_skeleton(
    data: pd.DataFrame,
    alpha: float = 0.05,
    test: CiTestName = "chi-square",
    max_condition_size: Optional[int] = None,
    tester: Optional[CiTester] = None,
) -> Tuple[PartialAncestralGraph, Sepsets]:
    """
    Learn the undirected skeleton by removing conditionally independent pairs.

    Adjacency sets are frozen at the start of each depth so the result does
    not depend on the order edges are visited.

    Args:
        data: One column per variable
        alpha: Significance level
        test: "chi-square" or "fisher-z"
        max_condition_size: Largest conditioning set to try (unbounded if None)
        tester: Pre-built tester (its log records every query)

    Returns:
        (graph with circle marks, sepsets of removed pairs)
    """
    tester = tester or CiTester(data, test, alpha)
    if len(tester.variables) < 2:
        raise CausalDiscoveryError("Skeleton search needs at least two variables")

    graph = PartialAncestralGraph.complete(tester.variables)
    sepsets: Sepsets = {}
    ordered = sorted(tester.variables)

    depth = 0
    while max_condition_size is None or depth <= max_condition_size:
        frozen = {node: set(graph.adjacent(node)) for node in ordered}
        testable = False
        for x, y in combinations(ordered, 2):
            if not graph.is_adjacent(x, y):
                continue
            for base, other in ((x, y), (y, x)):
                candidates = sorted(frozen[base] - {other})
                if len(candidates) < depth:
                    continue
                testable = True
                separated = False
                for cond in combinations(candidates, depth):
                    if tester(x, y, cond).independent:
                        graph.remove_edge(x, y)
                        sepsets[frozenset((x, y))] = cond
                        logger.debug(f"Removed {x} - {y} given {list(cond)}")
                        separated = True
                        break
                if separated:
                    break
        if not testable:
            break
        depth += 1

    graph.sepsets = dict(sepsets)
    logger.info(
        f"Skeleton: {len(graph.adjacency_pairs())} edges after {len(tester.log)} CI tests"
    )
    return graph, sepsets


def _would_create_cycle(graph: PartialAncestralGraph, tail: str, head: str) -> bool:
    return graph.has_directed_path(head, tail)


def _set_endpoint(
    graph: PartialAncestralGraph,
    a: str,
    b: str,
    mark: Mark,
    rule: str,
    allow_bidirected: bool = True,
) -> bool:
    """Set the mark at ``b`` on a - b unless it conflicts; first orientation wins."""
    current = graph.mark(a, b)
    if current == mark:
        return False
    if current != Mark.CIRCLE:
        logger.warning(
            f"{rule}: conflicting orientation at {b} on {a} - {b} "
            f"({current.value} kept, {mark.value} ignored)"
        )
        return False
    if mark == Mark.ARROW and not allow_bidirected and graph.mark(b, a) == Mark.ARROW:
        logger.warning(f"{rule}: bidirected edge {a} <-> {b} not allowed; keeping first orientation")
        return False
    other = graph.mark(b, a)
    if mark == Mark.ARROW and other == Mark.TAIL and _would_create_cycle(graph, a, b):
        logger.warning(f"{rule}: orienting {a} --> {b} would create a directed cycle; skipped")
        return False
    if mark == Mark.TAIL and other == Mark.ARROW and _would_create_cycle(graph, b, a):
        logger.warning(f"{rule}: orienting {b} --> {a} would create a directed cycle; skipped")
        return False
    graph.set_mark(a, b, mark)
    return True


def _orient_directed(graph: PartialAncestralGraph, tail: str, head: str, rule: str) -> bool:
    """Orient tail --> head, respecting existing marks and acyclicity."""
    if graph.is_directed(tail, head):
        return False
    if graph.mark(head, tail) not in (Mark.CIRCLE, Mark.TAIL) or graph.mark(tail, head) not in (
        Mark.CIRCLE,
        Mark.ARROW,
    ):
        logger.warning(f"{rule}: cannot orient {tail} --> {head} over existing marks; skipped")
        return False
    if _would_create_cycle(graph, tail, head):
        logger.warning(f"{rule}: orienting {tail} --> {head} would create a directed cycle; skipped")
        return False
    graph.set_mark(head, tail, Mark.TAIL)
    graph.set_mark(tail, head, Mark.ARROW)
    return True


def orient_v_structures(
    skeleton: PartialAncestralGraph, sepsets: Sepsets, allow_bidirected: bool = True
) -> PartialAncestralGraph:
    """
    Orient every unshielded collider x *-> z <-* y with z outside sepset(x, y).

    Args:
        skeleton: Graph from the skeleton search
        sepsets: Separating sets from the same run
        allow_bidirected: Permit x <-> z when two colliders share an edge

    Returns:
        New, partially oriented graph
    """
    graph = skeleton.copy()
    graph.sepsets = dict(sepsets)
    for z in sorted(graph.nodes):
        for x, y in combinations(sorted(graph.adjacent(z)), 2):
            if graph.is_adjacent(x, y):
                continue
            sepset = sepsets.get(frozenset((x, y)))
            if sepset is None:
                logger.warning(f"No sepset recorded for non-adjacent {x}, {y}; triple skipped")
                continue
            if z in sepset:
                continue
            _set_endpoint(graph, x, z, Mark.ARROW, "R0", allow_bidirected)
            _set_endpoint(graph, y, z, Mark.ARROW, "R0", allow_bidirected)
    return graph


def possible_d_sep(graph: PartialAncestralGraph, x: str) -> Set[str]:
    """
    Nodes reachable from ``x`` along paths whose every inner node is a collider
    or sits in a triangle with its path neighbours.
    """
    reachable: Set[str] = set()
    queue = deque((x, y) for y in graph.adjacent(x))
    visited: Set[Tuple[str, str]] = set(queue)
    while queue:
        previous, current = queue.popleft()
        reachable.add(current)
        for nxt in graph.adjacent(current):
            if nxt in (previous, x):
                continue
            collider = (
                graph.mark(previous, current) == Mark.ARROW
                and graph.mark(nxt, current) == Mark.ARROW
            )
            if not (collider or graph.is_adjacent(previous, nxt)):
                continue
            if (current, nxt) not in visited:
                visited.add((current, nxt))
                queue.append((current, nxt))
    reachable.discard(x)
    return reachable


def _refine_with_possible_d_sep(
    graph: PartialAncestralGraph,
    sepsets: Sepsets,
    tester: CiTester,
    max_condition_size: Optional[int],
) -> int:
    """Remove edges separated by subsets of Possible-D-Sep; returns the removal count."""
    pds = {node: possible_d_sep(graph, node) for node in graph.nodes}
    removed = 0
    for x, y in sorted(tuple(sorted(pair)) for pair in graph.adjacency_pairs()):
        separated = False
        for base in (x, y):
            pool = sorted(pds[base] - {x, y})
            largest = len(pool) if max_condition_size is None else min(len(pool), max_condition_size)
            for size in range(1, largest + 1):
                for cond in combinations(pool, size):
                    if tester(x, y, cond).independent:
                        graph.remove_edge(x, y)
                        sepsets[frozenset((x, y))] = cond
                        logger.debug(f"Possible-D-Sep removed {x} - {y} given {list(cond)}")
                        separated = True
                        removed += 1
                        break
                if separated:
                    break
            if separated:
                break
    return removed


def _rule_1(graph: PartialAncestralGraph) -> bool:
    changed = False
    for b in graph.nodes:
        for a in graph.adjacent(b):
            if graph.mark(a, b) != Mark.ARROW:
                continue
            for c in graph.adjacent(b):
                if c == a or graph.is_adjacent(a, c) or graph.mark(c, b) != Mark.CIRCLE:
                    continue
                changed |= _orient_directed(graph, b, c, "R1")
    return changed


def _rule_2(graph: PartialAncestralGraph) -> bool:
    changed = False
    for a in graph.nodes:
        for c in graph.adjacent(a):
            if graph.mark(a, c) != Mark.CIRCLE:
                continue
            for b in graph.adjacent(a):
                if b == c or not graph.is_adjacent(b, c):
                    continue
                first = graph.is_directed(a, b) and graph.mark(b, c) == Mark.ARROW
                second = graph.mark(a, b) == Mark.ARROW and graph.is_directed(b, c)
                if first or second:
                    changed |= _set_endpoint(graph, a, c, Mark.ARROW, "R2")
                    break
    return changed


def _rule_3(graph: PartialAncestralGraph) -> bool:
    changed = False
    for b in graph.nodes:
        for a, c in combinations(graph.adjacent(b), 2):
            if graph.is_adjacent(a, c):
                continue
            if graph.mark(a, b) != Mark.ARROW or graph.mark(c, b) != Mark.ARROW:
                continue
            for d in graph.adjacent(b):
                if d in (a, c) or graph.mark(d, b) != Mark.CIRCLE:
                    continue
                if not (graph.is_adjacent(d, a) and graph.is_adjacent(d, c)):
                    continue
                if graph.mark(a, d) == Mark.CIRCLE and graph.mark(c, d) == Mark.CIRCLE:
                    changed |= _set_endpoint(graph, d, b, Mark.ARROW, "R3")
    return changed


def _discriminating_path_end(
    graph: PartialAncestralGraph, a: str, b: str, c: str
) -> Optional[str]:
    """
    Start ``d`` of a discriminating path <d, ..., a, b, c> for ``b``, if any.

    Inner nodes are colliders on the path and parents of ``c``; ``d`` is not
    adjacent to ``c``.
    """
    queue = deque([a])
    visited = {a, b, c}
    while queue:
        current = queue.popleft()
        for d in graph.adjacent(current):
            if d in visited or graph.mark(d, current) != Mark.ARROW:
                continue
            visited.add(d)
            if not graph.is_adjacent(d, c):
                return d
            if graph.is_directed(d, c) and graph.mark(current, d) == Mark.ARROW:
                queue.append(d)
    return None


def _rule_4(graph: PartialAncestralGraph) -> bool:
    changed = False
    for c in graph.nodes:
        for b in graph.adjacent(c):
            if graph.mark(c, b) != Mark.CIRCLE:
                continue
            for a in graph.adjacent(b):
                if a == c or not graph.is_adjacent(a, c):
                    continue
                if not graph.is_directed(a, c) or graph.mark(b, a) != Mark.ARROW:
                    continue
                d = _discriminating_path_end(graph, a, b, c)
                if d is None:
                    continue
                sepset = graph.sepset(d, c) or ()
                if b in sepset:
                    changed |= _orient_directed(graph, b, c, "R4")
                else:
                    changed |= _set_endpoint(graph, a, b, Mark.ARROW, "R4")
                    changed |= _set_endpoint(graph, c, b, Mark.ARROW, "R4")
                    changed |= _set_endpoint(graph, b, c, Mark.ARROW, "R4")
                break
    return changed


def _potentially_directed(graph: PartialAncestralGraph, a: str, b: str) -> bool:
    """Edge a - b could be oriented a --> b."""
    return graph.mark(b, a) != Mark.ARROW and graph.mark(a, b) != Mark.TAIL


def _uncovered_pd_path_exists(
    graph: PartialAncestralGraph, previous: str, start: str, target: str, forbidden: Set[str]
) -> bool:
    """Uncovered potentially directed path start ~> target continuing from ``previous``."""
    stack = [(previous, start, {previous, start})]
    while stack:
        prev, current, on_path = stack.pop()
        for nxt in graph.adjacent(current):
            if nxt in on_path or nxt in forbidden:
                continue
            if not _potentially_directed(graph, current, nxt) or graph.is_adjacent(prev, nxt):
                continue
            if nxt == target:
                return True
            stack.append((current, nxt, on_path | {nxt}))
    return False


def _pd_first_steps(graph: PartialAncestralGraph, a: str, target: str, forbidden: Set[str]) -> Set[str]:
    """Successors of ``a`` on uncovered potentially directed paths from ``a`` to ``target``."""
    steps = set()
    for mu in graph.adjacent(a):
        if mu in forbidden or not _potentially_directed(graph, a, mu):
            continue
        if mu == target or _uncovered_pd_path_exists(graph, a, mu, target, forbidden):
            steps.add(mu)
    return steps


def _circle_arrow_pairs(graph: PartialAncestralGraph) -> List[Tuple[str, str]]:
    return [
        (a, c)
        for a in graph.nodes
        for c in graph.adjacent(a)
        if graph.mark(a, c) == Mark.ARROW and graph.mark(c, a) == Mark.CIRCLE
    ]


def _rule_8(graph: PartialAncestralGraph) -> bool:
    changed = False
    for a, c in _circle_arrow_pairs(graph):
        for b in graph.adjacent(a):
            if b == c or not graph.is_directed(b, c):
                continue
            tail_to_b = graph.mark(b, a) == Mark.TAIL and graph.mark(a, b) in (Mark.ARROW, Mark.CIRCLE)
            if tail_to_b:
                changed |= _set_endpoint(graph, c, a, Mark.TAIL, "R8")
                break
    return changed


def _rule_9(graph: PartialAncestralGraph) -> bool:
    changed = False
    for a, c in _circle_arrow_pairs(graph):
        for b in graph.adjacent(a):
            if b == c or graph.is_adjacent(b, c) or not _potentially_directed(graph, a, b):
                continue
            if _uncovered_pd_path_exists(graph, a, b, c, set()):
                changed |= _set_endpoint(graph, c, a, Mark.TAIL, "R9")
                break
    return changed


def _rule_10(graph: PartialAncestralGraph) -> bool:
    changed = False
    for a, c in _circle_arrow_pairs(graph):
        parents = [p for p in graph.adjacent(c) if p != a and graph.is_directed(p, c)]
        for b, d in combinations(parents, 2):
            first_b = _pd_first_steps(graph, a, b, {c})
            first_d = _pd_first_steps(graph, a, d, {c})
            if any(
                mu != omega and not graph.is_adjacent(mu, omega)
                for mu in first_b
                for omega in first_d
            ):
                changed |= _set_endpoint(graph, c, a, Mark.TAIL, "R10")
                break
    return changed


ORIENTATION_RULES = (
    ("R1", _rule_1),
    ("R2", _rule_2),
    ("R3", _rule_3),
    ("R4", _rule_4),
    ("R8", _rule_8),
    ("R9", _rule_9),
    ("R10", _rule_10),
)


def apply_orientation_rules(graph: PartialAncestralGraph, max_rounds: int = 100) -> PartialAncestralGraph:
    """Apply the orientation rules in place until no mark changes."""
    for round_no in range(1, max_rounds + 1):
        changed = False
        for name, rule in ORIENTATION_RULES:
            if rule(graph):
                logger.debug(f"Round {round_no}: {name} changed marks")
                changed = True
        if not changed:
            return graph
    logger.warning(f"Orientation rules did not reach a fixpoint after {max_rounds} rounds")
    return graph


def fci(
    data: pd.DataFrame,
    alpha: float = 0.05,
    test: CiTestName = "chi-square",
    max_condition_size: Optional[int] = None,
    tester: Optional[CiTester] = None,
) -> PartialAncestralGraph:
    """
    Fast Causal Inference allowing latent confounders.

    Args:
        data: One column per variable
        alpha: Significance level
        test: "chi-square" (categorical columns) or "fisher-z" (numeric columns)
        max_condition_size: Largest conditioning set to try
        tester: Pre-built tester

    Returns:
        PartialAncestralGraph with sepsets attached
    """
    variables = [str(column) for column in data.columns]
    if not variables:
        raise CausalDiscoveryError("FCI needs at least one variable")
    if len(variables) == 1:
        return PartialAncestralGraph(variables)

    tester = tester or CiTester(data, test, alpha)
    skeleton, sepsets = pc_skeleton(data, alpha, test, max_condition_size, tester)

    partial = orient_v_structures(skeleton, sepsets)
    removed = _refine_with_possible_d_sep(partial, sepsets, tester, max_condition_size)
    logger.info(f"Possible-D-Sep refinement removed {removed} edges")

    partial.reset_marks(Mark.CIRCLE)
    graph = orient_v_structures(partial, sepsets)
    apply_orientation_rules(graph)
    graph.sepsets = dict(sepsets)
    return graph


class NeighborAnnotation(BaseModel):
    """A node near the target and the marks of the connecting edge."""

    model_config = ConfigDict(frozen=True)

    node: str
    distance: int
    mark_at_target: Optional[Mark] = None
    mark_at_node: Optional[Mark] = None
    relation: str


def _relation(mark_at_target: Mark, mark_at_node: Mark) -> str:
    if mark_at_target == Mark.ARROW and mark_at_node == Mark.ARROW:
        return "confounded"
    if mark_at_target == Mark.ARROW and mark_at_node == Mark.TAIL:
        return "cause"
    if mark_at_target == Mark.TAIL and mark_at_node == Mark.ARROW:
        return "effect"
    return "undetermined"


def neighborhood(pag: PartialAncestralGraph, target: str, radius: int = 1) -> List[NeighborAnnotation]:
    """
    Nodes within ``radius`` edges of ``target``, adjacent ones annotated with
    their endpoint marks.

    Relations: ``cause`` (node --> target), ``effect`` (target --> node),
    ``confounded`` (<->, correlation rather than causation) and
    ``undetermined`` (a circle mark remains). Nodes further away are
    ``indirect``.
    """
    if target not in pag.nodes:
        raise CausalDiscoveryError(f"Unknown target variable {target!r}")
    if radius < 1:
        raise CausalDiscoveryError(f"radius must be >= 1, got {radius}")

    distances: Dict[str, int] = {target: 0}
    queue = deque([target])
    while queue:
        node = queue.popleft()
        if distances[node] == radius:
            continue
        for other in pag.adjacent(node):
            if other not in distances:
                distances[other] = distances[node] + 1
                queue.append(other)

    annotations = []
    for node in pag.nodes:
        distance = distances.get(node)
        if node == target or distance is None:
            continue
        if distance == 1:
            at_target, at_node = pag.mark(node, target), pag.mark(target, node)
            annotations.append(
                NeighborAnnotation(
                    node=node, distance=1, mark_at_target=at_target, mark_at_node=at_node,
                    relation=_relation(at_target, at_node),
                )
            )
        else:
            annotations.append(NeighborAnnotation(node=node, distance=distance, relation="indirect"))
    return annotations
