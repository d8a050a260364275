"""Hypernym taxonomy and the three lexical similarity measures.

The taxonomy is a DAG of ``child -> parent`` edges over synset ids.  Depth
is the node count of the longest root-to-node path (a root has depth 1),
the common single-depth convention for multiple-inheritance taxonomies;
the least common subsumer (lcs) is the deepest common ancestor, ties
broken by lexicographically smallest id.

Similarities, all symmetric with s(x, x) = 1 and codomain within [0, 1]:

    path(s1, s2) = 1 / (1 + d)  with d the shortest undirected path in edges
    wup(s1, s2)  = 2 * depth(lcs) / (depth(s1) + depth(s2))
    lin(s1, s2)  = 2 * IC(lcs) / (IC(s1) + IC(s2))

path's formula is the standard convention that keeps its codomain aligned
with the other measures.  IC values are ingested from a TSV table
(``synset_id<TAB>ic_value``), not computed from a corpus.

Distance matrices use 1 - similarity so every matrix shares the [0, 1]
codomain of the visual distance.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .distance import DistanceMatrix
from .errors import (
    CycleDetected,
    DuplicateSynsetId,
    MalformedRow,
    MissingIC,
    NoCommonAncestor,
    TooFewSynsets,
    UnknownSynset,
    ZeroDenominator,
)

MEASURES = ("path", "wup", "lin")


@dataclass
class Taxonomy:
    """Validated hypernym DAG with depths and ancestor sets precomputed."""

    parents: dict[str, tuple[str, ...]]
    nodes: frozenset[str] = field(init=False)
    roots: tuple[str, ...] = field(init=False)
    _depths: dict[str, int] = field(init=False, repr=False)
    _ancestors: dict[str, frozenset[str]] = field(init=False, repr=False)
    _undirected: dict[str, tuple[str, ...]] = field(init=False, repr=False)

    def __post_init__(self):
        nodes = set(self.parents)
        for parent_list in self.parents.values():
            nodes.update(parent_list)
        self.parents = {
            node: tuple(sorted(set(self.parents.get(node, ())))) for node in nodes
        }
        self.nodes = frozenset(nodes)
        self.roots = tuple(sorted(n for n in nodes if not self.parents[n]))
        order = self._topological_order()
        self._depths = {}
        self._ancestors = {}
        for node in order:
            if not self.parents[node]:
                self._depths[node] = 1
                self._ancestors[node] = frozenset({node})
            else:
                self._depths[node] = 1 + max(
                    self._depths[p] for p in self.parents[node]
                )
                merged: set[str] = {node}
                for p in self.parents[node]:
                    merged |= self._ancestors[p]
                self._ancestors[node] = frozenset(merged)
        undirected: dict[str, set[str]] = {node: set() for node in nodes}
        for child, parent_list in self.parents.items():
            for parent in parent_list:
                undirected[child].add(parent)
                undirected[parent].add(child)
        self._undirected = {n: tuple(sorted(undirected[n])) for n in nodes}

    def _topological_order(self) -> list[str]:
        """Children after parents; raises CycleDetected with one cycle shown."""
        state: dict[str, int] = {}
        order: list[str] = []
        for start in sorted(self.nodes):
            if state.get(start):
                continue
            stack: list[tuple[str, int]] = [(start, 0)]
            path: list[str] = []
            while stack:
                node, phase = stack.pop()
                if phase == 0:
                    if state.get(node) == 2:
                        continue
                    if state.get(node) == 1:
                        cycle = path[path.index(node):] + [node]
                        raise CycleDetected(
                            "hypernym edges form a cycle: " + " -> ".join(cycle)
                        )
                    state[node] = 1
                    path.append(node)
                    stack.append((node, 1))
                    for parent in self.parents[node]:
                        if state.get(parent) == 1:
                            cycle = path[path.index(parent):] + [parent]
                            raise CycleDetected(
                                "hypernym edges form a cycle: " + " -> ".join(cycle)
                            )
                        if state.get(parent) != 2:
                            stack.append((parent, 0))
                else:
                    state[node] = 2
                    path.pop()
                    order.append(node)
        return order

    def require(self, synset_id: str) -> None:
        if synset_id not in self.nodes:
            raise UnknownSynset(f"synset {synset_id!r} is not in the taxonomy")

    def depth(self, synset_id: str) -> int:
        self.require(synset_id)
        return self._depths[synset_id]

    def ancestors_or_self(self, synset_id: str) -> frozenset[str]:
        self.require(synset_id)
        return self._ancestors[synset_id]

    def lcs(self, s1: str, s2: str) -> str:
        """Deepest common ancestor; lexicographic tie-break."""
        common = self.ancestors_or_self(s1) & self.ancestors_or_self(s2)
        if not common:
            raise NoCommonAncestor(f"{s1!r} and {s2!r} share no ancestor")
        return min(common, key=lambda n: (-self._depths[n], n))

    def shortest_path_edges(self, s1: str, s2: str) -> int:
        """BFS distance in edges, hypernym edges treated as undirected."""
        self.require(s1)
        self.require(s2)
        if s1 == s2:
            return 0
        seen = {s1}
        frontier = deque([(s1, 0)])
        while frontier:
            node, dist = frontier.popleft()
            for neighbor in self._undirected[node]:
                if neighbor == s2:
                    return dist + 1
                if neighbor not in seen:
                    seen.add(neighbor)
                    frontier.append((neighbor, dist + 1))
        raise NoCommonAncestor(f"{s1!r} and {s2!r} are not connected")


def depth(taxonomy: Taxonomy, synset_id: str) -> int:
    return taxonomy.depth(synset_id)


def lcs(taxonomy: Taxonomy, s1: str, s2: str) -> str:
    return taxonomy.lcs(s1, s2)


def parse_taxonomy(source: TextIO | Iterable[str]) -> Taxonomy:
    """Parse ``child<TAB>parent`` rows; duplicate edges collapse silently."""
    parents: dict[str, set[str]] = {}
    for lineno, line in enumerate(source, start=1):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise MalformedRow(
                f"line {lineno}: expected 2 tab-separated fields, got {len(fields)}"
            )
        child, parent = fields
        if not child or not parent:
            raise MalformedRow(f"line {lineno}: empty synset id")
        parents.setdefault(child, set()).add(parent)
        parents.setdefault(parent, set())
    if not parents:
        raise MalformedRow("taxonomy has no edges")
    return Taxonomy(parents={k: tuple(v) for k, v in parents.items()})


@dataclass(frozen=True)
class InformationContent:
    """Externally computed -log p(c) per synset, non-negative and finite."""

    ic: dict[str, float]

    def __post_init__(self):
        for synset_id, value in self.ic.items():
            if not np.isfinite(value) or value < 0:
                raise ValueError(
                    f"information content for {synset_id!r} must be finite "
                    f"and >= 0, got {value}"
                )

    def require(self, synset_id: str) -> float:
        if synset_id not in self.ic:
            raise MissingIC(f"no information content for synset {synset_id!r}")
        return self.ic[synset_id]


def parse_information_content(source: TextIO | Iterable[str]) -> InformationContent:
    ic: dict[str, float] = {}
    for lineno, line in enumerate(source, start=1):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise MalformedRow(
                f"line {lineno}: expected 2 tab-separated fields, got {len(fields)}"
            )
        synset_id, value_text = fields
        try:
            value = float(value_text)
        except ValueError:
            raise MalformedRow(f"line {lineno}: bad IC value {value_text!r}") from None
        if synset_id in ic:
            raise DuplicateSynsetId(f"line {lineno}: IC for {synset_id!r} repeated")
        ic[synset_id] = value
    return InformationContent(ic=ic)


def path_similarity(taxonomy: Taxonomy, s1: str, s2: str) -> float:
    common = taxonomy.ancestors_or_self(s1) & taxonomy.ancestors_or_self(s2)
    if not common:
        raise NoCommonAncestor(f"{s1!r} and {s2!r} share no ancestor")
    return 1.0 / (1.0 + taxonomy.shortest_path_edges(s1, s2))


def wup_similarity(taxonomy: Taxonomy, s1: str, s2: str) -> float:
    subsumer = taxonomy.lcs(s1, s2)
    return (
        2.0 * taxonomy.depth(subsumer)
        / (taxonomy.depth(s1) + taxonomy.depth(s2))
    )


def lin_similarity(
    taxonomy: Taxonomy, ic: InformationContent, s1: str, s2: str
) -> float:
    subsumer = taxonomy.lcs(s1, s2)
    ic1 = ic.require(s1)
    ic2 = ic.require(s2)
    ic_lcs = ic.require(subsumer)
    if ic1 + ic2 == 0.0:
        raise ZeroDenominator(
            f"IC({s1!r}) + IC({s2!r}) is zero; lin similarity undefined"
        )
    return 2.0 * ic_lcs / (ic1 + ic2)


def lexical_distance_matrix(
    taxonomy: Taxonomy,
    ids: Sequence[str],
    measure: str,
    ic: InformationContent | None = None,
) -> DistanceMatrix:
    """Condensed 1 - similarity matrix over the given synsets.

    Ids are sorted to match the visual matrix ordering convention; per-pair
    errors abort with the offending pair named.
    """
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}, got {measure!r}")
    if measure == "lin" and ic is None:
        raise MissingIC("lin distance requires an information content table")
    ordered = sorted(ids)
    n = len(ordered)
    if n < 2:
        raise TooFewSynsets(f"need >= 2 synsets, got {n}")
    for k in range(n - 1):
        if ordered[k] == ordered[k + 1]:
            raise DuplicateSynsetId(f"synset {ordered[k]!r} appears twice")
    for synset_id in ordered:
        taxonomy.require(synset_id)

    condensed = np.empty(n * (n - 1) // 2, dtype=np.float32)
    cursor = 0
    for i in range(n - 1):
        for j in range(i + 1, n):
            s1, s2 = ordered[i], ordered[j]
            try:
                if measure == "path":
                    sim = path_similarity(taxonomy, s1, s2)
                elif measure == "wup":
                    sim = wup_similarity(taxonomy, s1, s2)
                else:
                    sim = lin_similarity(taxonomy, ic, s1, s2)
            except (NoCommonAncestor, MissingIC, ZeroDenominator) as exc:
                raise type(exc)(f"pair ({s1!r}, {s2!r}): {exc}") from exc
            condensed[cursor] = np.float32(1.0 - sim)
            cursor += 1

    return DistanceMatrix(
        synset_ids=tuple(ordered),
        condensed=condensed,
        metric_name=measure,
        parameters={
            "similarity_to_distance": "1-sim",
            "depth_convention": "longest_root_path_node_counted",
        },
    )
