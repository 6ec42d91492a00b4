"""Node contributions to hyperedges from sub-hyperedge containment counts.

For a hyperedge e, a node's containment count is the number of observed
hyperedges that contain the node and are subsets of e (e counts itself when
observed).  The per-node contribution rescales these counts to sum to |e|,
so nodes that anchor many nested interactions weigh more than passive
members.  Contributions depend only on the observed hyperedge set and stay
fixed during inference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Hyperedge, HypergraphLayer

__all__ = [
    "SubHyperedgeCounter",
    "InternalDegreeTable",
    "EntropyReport",
    "count_sub_hyperedges",
    "compute_theta",
    "hyperedge_entropy",
    "entropy_report",
    "theta_table",
]


class SubHyperedgeCounter:
    """Containment queries against one layer via a per-node inverted index.

    Candidate sub-hyperedges are generated from the incidence lists of the
    query's nodes (any subset of e consists solely of nodes of e), then
    subset-checked; this avoids scanning the full hyperedge list per query.
    """

    def __init__(self, layer: HypergraphLayer):
        self.layer = layer
        self._incident: list[list[int]] = [[] for _ in range(layer.num_nodes)]
        for eid, e in enumerate(layer.hyperedges):
            for node in e.nodes:
                self._incident[node].append(eid)

    def incident_ids(self, node: int) -> list[int]:
        return self._incident[node]

    def counts(self, nodes: tuple[int, ...]) -> dict[int, int]:
        """Containment count for every node of the query set (0 allowed)."""
        node_set = set(nodes)
        size = len(nodes)
        counts = dict.fromkeys(nodes, 0)
        candidates: set[int] = set()
        for node in nodes:
            if node < self.layer.num_nodes:
                candidates.update(self._incident[node])
        for eid in candidates:
            sub = self.layer.hyperedges[eid].nodes
            if len(sub) <= size and node_set.issuperset(sub):
                for node in sub:
                    counts[node] += 1
        return counts

    def theta(self, nodes: tuple[int, ...]) -> dict[int, float]:
        """Contributions summing to |e|; uniform 1 when no sub-hyperedge exists."""
        counts = self.counts(nodes)
        total = sum(counts.values())
        if total == 0:
            return dict.fromkeys(nodes, 1.0)
        scale = len(nodes) / total
        return {node: c * scale for node, c in counts.items()}

    def entropy(self, nodes: tuple[int, ...], normalized: bool = False,
                base: float = math.e) -> float:
        """Entropy of the containment-count distribution over the query's nodes."""
        counts = self.counts(nodes)
        total = sum(counts.values())
        if total == 0:
            raise ValueError(f"no sub-hyperedges for {tuple(nodes)}")
        h = 0.0
        for c in counts.values():
            if c > 0:
                p = c / total
                h -= p * math.log(p)
        if normalized:
            return h / math.log(len(nodes))
        return h / math.log(base)

    def contained_in_larger(self, e: Hyperedge) -> bool:
        """True when e is a strict subset of some observed hyperedge."""
        node = min(e.nodes, key=lambda n: len(self._incident[n]))
        e_set = set(e.nodes)
        for eid in self._incident[node]:
            other = self.layer.hyperedges[eid].nodes
            if len(other) > e.size and set(other).issuperset(e_set):
                return True
        return False


def count_sub_hyperedges(layer: HypergraphLayer, e: Hyperedge) -> dict[int, int]:
    return SubHyperedgeCounter(layer).counts(e.nodes)


def compute_theta(layer: HypergraphLayer, e: Hyperedge) -> dict[int, float]:
    return SubHyperedgeCounter(layer).theta(e.nodes)


def hyperedge_entropy(layer: HypergraphLayer, e: Hyperedge, normalized: bool = False,
                      base: float = math.e) -> float:
    return SubHyperedgeCounter(layer).entropy(e.nodes, normalized=normalized, base=base)


@dataclass(frozen=True)
class InternalDegreeTable:
    """Per observed hyperedge, node contributions aligned with e.nodes."""

    theta: tuple[np.ndarray, ...]

    def for_edge(self, eid: int) -> np.ndarray:
        return self.theta[eid]


def theta_table(layer: HypergraphLayer) -> InternalDegreeTable:
    """Contributions for every observed hyperedge of the layer."""
    counter = SubHyperedgeCounter(layer)
    values = []
    for e in layer.hyperedges:
        th = counter.theta(e.nodes)
        values.append(np.array([th[n] for n in e.nodes], dtype=float))
    return InternalDegreeTable(tuple(values))


@dataclass(frozen=True)
class EntropyReport:
    """Entropy distribution of hyperedges of size >= 3, plus pair nesting."""

    threshold: float
    normalized: bool
    num_considered: int
    num_below: int
    fraction_below: float
    histogram_counts: np.ndarray
    histogram_edges: np.ndarray
    entropies: np.ndarray
    size2_total: int
    size2_contained: int
    size2_containment_rate: float


def entropy_report(layer: HypergraphLayer, threshold: float, normalized: bool = True,
                   base: float = math.e, bins: int = 10) -> EntropyReport:
    """Summarize containment entropies and the nesting of size-2 hyperedges.

    The entropy statistics cover observed hyperedges of size >= 3; the
    size-2 statistic is the fraction of observed pairs contained in some
    larger observed hyperedge.
    """
    counter = SubHyperedgeCounter(layer)
    entropies = []
    for e in layer.hyperedges:
        if e.size >= 3:
            entropies.append(counter.entropy(e.nodes, normalized=normalized, base=base))
    values = np.array(entropies, dtype=float)

    size2 = [e for e in layer.hyperedges if e.size == 2]
    contained = sum(1 for e in size2 if counter.contained_in_larger(e))

    if values.size:
        upper = 1.0 if normalized else max(1.0, float(values.max()))
        counts, edges = np.histogram(values, bins=bins, range=(0.0, upper))
        fraction = float(np.mean(values < threshold))
    else:
        counts, edges = np.histogram([], bins=bins, range=(0.0, 1.0))
        fraction = 0.0
    return EntropyReport(
        threshold=threshold,
        normalized=normalized,
        num_considered=int(values.size),
        num_below=int(np.sum(values < threshold)) if values.size else 0,
        fraction_below=fraction,
        histogram_counts=counts,
        histogram_edges=edges,
        entropies=values,
        size2_total=len(size2),
        size2_contained=contained,
        size2_containment_rate=contained / len(size2) if size2 else float("nan"),
    )
