"""
Partial ancestral graphs.

Each edge carries one endpoint mark per side: arrowhead, tail or circle. Text
serialization writes one edge per line as ``A <m>-<m> B`` (``o-o``, ``o->``,
``-->``, ``<->`` ...) preceded by one ``node <name>`` line per variable.
"""

from enum import Enum
from itertools import combinations
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple
import re

import networkx as nx

from src.errors import CausalDiscoveryError


class Mark(str, Enum):
    """Endpoint mark of a PAG edge."""

    ARROW = ">"
    TAIL = "-"
    CIRCLE = "o"


_LEFT_SYMBOL = {Mark.ARROW: "<", Mark.TAIL: "-", Mark.CIRCLE: "o"}
_SYMBOL_MARK = {"<": Mark.ARROW, ">": Mark.ARROW, "-": Mark.TAIL, "o": Mark.CIRCLE}
_EDGE_RE = re.compile(r"^(?P<a>.+?)\s+(?P<left>[<>o-])-(?P<right>[<>o-])\s+(?P<b>.+)$")

Sepsets = Dict[FrozenSet[str], Tuple[str, ...]]


class PartialAncestralGraph:
    """
    Mixed graph with circle/tail/arrow endpoint marks.

    ``mark(a, b)`` is the mark at ``b`` on the edge between ``a`` and ``b``.
    """

    def __init__(self, nodes: Sequence[str] = ()):
        self.nodes: List[str] = []
        self._marks: Dict[Tuple[str, str], Mark] = {}
        self.sepsets: Sepsets = {}
        for node in nodes:
            self.add_node(node)

    @classmethod
    def complete(cls, nodes: Sequence[str]) -> "PartialAncestralGraph":
        """Complete graph with circle marks everywhere."""
        graph = cls(nodes)
        for a, b in combinations(graph.nodes, 2):
            graph.add_edge(a, b)
        return graph

    def add_node(self, node: str) -> None:
        if node in self.nodes:
            raise CausalDiscoveryError(f"Duplicate node {node!r}")
        self.nodes.append(node)

    def _check_node(self, node: str) -> None:
        if node not in self.nodes:
            raise CausalDiscoveryError(f"Unknown node {node!r}")

    def add_edge(self, a: str, b: str, mark_a: Mark = Mark.CIRCLE, mark_b: Mark = Mark.CIRCLE) -> None:
        """Add an edge; ``mark_a`` sits at ``a`` and ``mark_b`` at ``b``."""
        self._check_node(a)
        self._check_node(b)
        if a == b:
            raise CausalDiscoveryError(f"Self-edge on {a!r}")
        if self.is_adjacent(a, b):
            raise CausalDiscoveryError(f"Edge {a!r} - {b!r} already present")
        self._marks[(a, b)] = Mark(mark_b)
        self._marks[(b, a)] = Mark(mark_a)

    def remove_edge(self, a: str, b: str) -> None:
        if not self.is_adjacent(a, b):
            raise CausalDiscoveryError(f"No edge {a!r} - {b!r}")
        del self._marks[(a, b)]
        del self._marks[(b, a)]

    def is_adjacent(self, a: str, b: str) -> bool:
        return (a, b) in self._marks

    def adjacent(self, node: str) -> List[str]:
        """Neighbours of ``node`` in node order."""
        return [other for other in self.nodes if (node, other) in self._marks]

    def mark(self, a: str, b: str) -> Mark:
        """Mark at ``b`` on the edge a - b."""
        try:
            return self._marks[(a, b)]
        except KeyError:
            raise CausalDiscoveryError(f"No edge {a!r} - {b!r}") from None

    def set_mark(self, a: str, b: str, mark: Mark) -> None:
        """Set the mark at ``b`` on the edge a - b."""
        if not self.is_adjacent(a, b):
            raise CausalDiscoveryError(f"No edge {a!r} - {b!r}")
        self._marks[(a, b)] = Mark(mark)

    def edges(self) -> Iterator[Tuple[str, str, Mark, Mark]]:
        """Yield (a, b, mark at a, mark at b) once per edge in node order."""
        for i, a in enumerate(self.nodes):
            for b in self.nodes[i + 1:]:
                if (a, b) in self._marks:
                    yield a, b, self._marks[(b, a)], self._marks[(a, b)]

    def reset_marks(self, mark: Mark = Mark.CIRCLE) -> None:
        for key in self._marks:
            self._marks[key] = mark

    def is_directed(self, a: str, b: str) -> bool:
        """Whether a --> b."""
        return (
            self.is_adjacent(a, b)
            and self._marks[(a, b)] == Mark.ARROW
            and self._marks[(b, a)] == Mark.TAIL
        )

    def is_bidirected(self, a: str, b: str) -> bool:
        return (
            self.is_adjacent(a, b)
            and self._marks[(a, b)] == Mark.ARROW
            and self._marks[(b, a)] == Mark.ARROW
        )

    def directed_graph(self) -> nx.DiGraph:
        """The --> subgraph."""
        graph = nx.DiGraph()
        graph.add_nodes_from(self.nodes)
        graph.add_edges_from((a, b) for (a, b) in self._marks if self.is_directed(a, b))
        return graph

    def has_directed_cycle(self) -> bool:
        return not nx.is_directed_acyclic_graph(self.directed_graph())

    def has_directed_path(self, source: str, target: str) -> bool:
        return nx.has_path(self.directed_graph(), source, target)

    def skeleton(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.nodes)
        graph.add_edges_from((a, b) for a, b, _, _ in self.edges())
        return graph

    def adjacency_pairs(self) -> set:
        return {frozenset((a, b)) for a, b, _, _ in self.edges()}

    def copy(self) -> "PartialAncestralGraph":
        clone = PartialAncestralGraph(self.nodes)
        clone._marks = dict(self._marks)
        clone.sepsets = dict(self.sepsets)
        return clone

    def sepset(self, a: str, b: str) -> Optional[Tuple[str, ...]]:
        return self.sepsets.get(frozenset((a, b)))

    def to_text(self) -> str:
        """Serialize nodes and edges in the edge-list text format."""
        lines = [f"node {node}" for node in self.nodes]
        for a, b, mark_a, mark_b in self.edges():
            lines.append(f"{a} {_LEFT_SYMBOL[mark_a]}-{mark_b.value} {b}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PartialAncestralGraph":
        """Parse the edge-list text format; nodes first seen on edges are added in order."""
        graph = cls()
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("node "):
                name = line[5:].strip()
                if name not in graph.nodes:
                    graph.add_node(name)
                continue
            match = _EDGE_RE.match(line)
            if match is None:
                raise CausalDiscoveryError(f"Line {line_no}: cannot parse edge {raw!r}")
            a, b = match.group("a").strip(), match.group("b").strip()
            for name in (a, b):
                if name not in graph.nodes:
                    graph.add_node(name)
            graph.add_edge(a, b, _SYMBOL_MARK[match.group("left")], _SYMBOL_MARK[match.group("right")])
        return graph

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nodes": list(self.nodes),
            "edges": [
                {"a": a, "b": b, "mark_a": mark_a.value, "mark_b": mark_b.value}
                for a, b, mark_a, mark_b in self.edges()
            ],
            "sepsets": [
                {"pair": sorted(pair), "set": list(sepset)}
                for pair, sepset in sorted(self.sepsets.items(), key=lambda item: sorted(item[0]))
            ],
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PartialAncestralGraph):
            return NotImplemented
        return set(self.nodes) == set(other.nodes) and self._marks == other._marks

    def __repr__(self) -> str:
        return f"PartialAncestralGraph(nodes={len(self.nodes)}, edges={len(self._marks) // 2})"
