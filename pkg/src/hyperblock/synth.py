"""Benchmark multi-hypergraph construction.

Three generators: subsampled views of a real hypergraph joined by
community-aligned inter-edges, a planted-partition sampler with one-hot
memberships, and exhaustive Poisson sampling from an arbitrary latent state
on small node sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence, Union

import numpy as np

from .core import Hyperedge, HypergraphLayer, InterEdgeSet, MultiHypergraph
from .likelihood import LatentState, mu

__all__ = [
    "SynthConfig",
    "THREE_VIEW_HIGHSCHOOL",
    "build_views",
    "remove_inter_edges",
    "sample_from_model",
    "planted_memberships",
    "planted_partition",
]

_ENUM_NODE_LIMIT = 30
_ENUM_SIZE_LIMIT = 4
_PLANTED_CANDIDATE_CAP = 500_000


def _ceil(x: float) -> int:
    # guard against 0.7 * 10 style float fuzz just above an integer
    return int(math.ceil(x - 1e-12))


@dataclass
class SynthConfig:
    """Parameters of the subsampled-views construction."""

    sample_fraction: Union[float, Sequence[float]] = 0.8
    num_layers: int = 2
    inter_edge_count: Union[int, Sequence[int]] = 0
    noise_fraction: float = 0.0
    seed: int = 0
    pairs: Optional[Sequence[tuple[int, int]]] = None

    def resolved_pairs(self) -> list[tuple[int, int]]:
        if self.pairs is not None:
            return [tuple(p) for p in self.pairs]
        return list(combinations(range(self.num_layers), 2))

    def fraction_for(self, layer: int) -> float:
        if np.isscalar(self.sample_fraction):
            return float(self.sample_fraction)
        return float(self.sample_fraction[layer])

    def count_for(self, pair_index: int) -> int:
        if np.isscalar(self.inter_edge_count):
            return int(self.inter_edge_count)
        return int(self.inter_edge_count[pair_index])

    def validate(self) -> None:
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        for l in range(self.num_layers):
            f = self.fraction_for(l)
            if not 0.0 < f <= 1.0:
                raise ValueError(f"sample fraction {f} outside (0, 1]")
        if not 0.0 <= self.noise_fraction < 1.0:
            raise ValueError("noise_fraction must be in [0, 1)")
        pairs = self.resolved_pairs()
        for a, b in pairs:
            if not 0 <= a < b < self.num_layers:
                raise ValueError(f"invalid layer pair ({a}, {b})")
        for p in range(len(pairs)):
            if self.count_for(p) < 0:
                raise ValueError("inter_edge_count must be non-negative")


# three 20% views of the Highschool contact hypergraph, first view linked to
# the other two with fixed inter-edge budgets
THREE_VIEW_HIGHSCHOOL = SynthConfig(
    sample_fraction=0.2,
    num_layers=3,
    inter_edge_count=(2867, 2792),
    noise_fraction=0.0,
    seed=0,
    pairs=((0, 1), (0, 2)),
)


def _community_aligned_pairs(
    labels_a: np.ndarray,
    labels_b: np.ndarray,
    budget: int,
    noise_count: int,
    rng: np.random.Generator,
) -> list[tuple[int, int]]:
    """Uniform same-community cross pairs plus cross-community noise pairs.

    All returned pairs are distinct; same-community pairs are drawn without
    replacement by indexing into the per-community block decomposition.
    """
    labels_a = np.asarray(labels_a, dtype=float)
    labels_b = np.asarray(labels_b, dtype=float)
    # NaN marks unlabeled nodes; NaN != NaN keeps them out of the blocks
    values = np.intersect1d(np.unique(labels_a), np.unique(labels_b))
    blocks = []
    for c in values:
        ia = np.flatnonzero(labels_a == c)
        ib = np.flatnonzero(labels_b == c)
        if ia.size and ib.size:
            blocks.append((ia, ib))
    sizes = np.array([ia.size * ib.size for ia, ib in blocks], dtype=np.int64)
    total_same = int(sizes.sum())
    if budget > total_same:
        raise ValueError(
            f"budget {budget} exceeds the {total_same} available same-community pairs"
        )
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    flat = rng.choice(total_same, size=budget, replace=False) if budget else np.array([], int)
    pairs = []
    for idx in flat:
        block = int(np.searchsorted(offsets, idx, side="right")) - 1
        within = int(idx - offsets[block])
        ia, ib = blocks[block]
        pairs.append((int(ia[within // ib.size]), int(ib[within % ib.size])))

    seen = set(pairs)
    attempts = 0
    while len(pairs) < budget + noise_count:
        i = int(rng.integers(labels_a.size))
        j = int(rng.integers(labels_b.size))
        attempts += 1
        if attempts > 1000 * (noise_count + 1) + 1000:
            raise RuntimeError("could not sample enough cross-community noise pairs")
        if labels_a[i] == labels_b[j] or (i, j) in seen:
            continue
        seen.add((i, j))
        pairs.append((i, j))
    return pairs


def build_views(source: HypergraphLayer, cfg: SynthConfig) -> MultiHypergraph:
    """Independent hyperedge subsamples of one hypergraph, linked by community.

    Each view keeps the source's node indexing and ground truth and draws
    ceil(f * |E|) hyperedges uniformly without replacement.  Inter-edges
    connect same-community node pairs across each configured layer pair
    until the budget is met; ceil(noise_fraction * budget) extra edges then
    connect different-community pairs.  All inter-edge weights are 1.
    """
    cfg.validate()
    if source.ground_truth is None:
        raise ValueError("source layer has no ground truth to align inter-edges with")
    rng = np.random.default_rng(cfg.seed)
    labels = np.full(source.num_nodes, np.nan)
    for node, lab in source.ground_truth.items():
        labels[node] = lab

    layers = []
    for l in range(cfg.num_layers):
        m = _ceil(cfg.fraction_for(l) * source.num_hyperedges)
        idx = np.sort(rng.choice(source.num_hyperedges, size=m, replace=False))
        edges = tuple(source.hyperedges[i] for i in idx)
        layers.append(HypergraphLayer(source.num_nodes, edges, source.ground_truth))

    inter = []
    for p, (a, b) in enumerate(cfg.resolved_pairs()):
        budget = cfg.count_for(p)
        noise = _ceil(cfg.noise_fraction * budget)
        pairs = _community_aligned_pairs(labels, labels, budget, noise, rng)
        entries = tuple(sorted((i, j, 1.0) for i, j in pairs))
        inter.append(InterEdgeSet(a, b, entries))
    return MultiHypergraph(tuple(layers), tuple(inter))


def remove_inter_edges(mh: MultiHypergraph, ratio: float, seed=0) -> MultiHypergraph:
    """Uniformly drop ceil(ratio * |S|) inter-edges from every set."""
    if not 0.0 <= ratio <= 1.0:
        raise ValueError("ratio must be in [0, 1]")
    rng = np.random.default_rng(seed)
    new_sets = []
    for s in mh.inter_edges:
        n = len(s.edges)
        k = min(_ceil(ratio * n), n)
        dropped = set(rng.choice(n, size=k, replace=False).tolist()) if k else set()
        kept = tuple(e for idx, e in enumerate(s.edges) if idx not in dropped)
        new_sets.append(InterEdgeSet(s.layer_a, s.layer_b, kept))
    return MultiHypergraph(mh.layers, tuple(new_sets))


def _poisson_layer(
    u: np.ndarray,
    w: np.ndarray,
    max_size: int,
    rng: np.random.Generator,
    ground_truth=None,
) -> HypergraphLayer:
    """Draw every candidate node set of size 2..max_size from its Poisson rate.

    Node contributions are uniform (the within-edge weighting is data-derived
    and has no meaning before data exists).
    """
    n = u.shape[0]
    edges = []
    for size in range(2, max_size + 1):
        combos = np.array(list(combinations(range(n), size)), dtype=int)
        if combos.size == 0:
            continue
        sub = u[combos]                       # (C, size, K)
        s = sub.sum(axis=1)
        term1 = ((s @ w) * s).sum(axis=1)
        term2 = np.einsum("csk,kq,csq->c", sub, w, sub)
        rates = 0.5 * (term1 - term2) / mu(size)
        draws = rng.poisson(np.clip(rates, 0.0, None))
        for combo, a in zip(combos, draws):
            if a > 0:
                edges.append(Hyperedge(tuple(int(v) for v in combo), float(a)))
    edges.sort(key=lambda e: e.nodes)
    return HypergraphLayer(n, tuple(edges), ground_truth)


def sample_from_model(
    state: LatentState,
    max_size: int = 3,
    seed=0,
    layer_sizes: Optional[Sequence[int]] = None,
) -> MultiHypergraph:
    """Exhaustive Poisson draw of a multi-hypergraph from a latent state.

    Enumerates every node set of size 2..max_size per layer and every cross
    pair per inter-layer matrix; keeps the non-zero counts as weights.  The
    candidate space is enumerated exhaustively, so this is restricted to
    at most 30 nodes per layer and max_size at most 4.
    """
    state.validate()
    sizes = [m.shape[0] for m in state.u]
    if layer_sizes is not None and list(layer_sizes) != sizes:
        raise ValueError(f"layer_sizes {list(layer_sizes)} disagree with u rows {sizes}")
    if not 2 <= max_size <= _ENUM_SIZE_LIMIT:
        raise ValueError(f"max_size must be in [2, {_ENUM_SIZE_LIMIT}]")
    if any(n > _ENUM_NODE_LIMIT for n in sizes):
        raise ValueError(f"layers must have at most {_ENUM_NODE_LIMIT} nodes")
    rng = np.random.default_rng(seed)
    layers = tuple(
        _poisson_layer(state.u[l], state.w[l], max_size, rng)
        for l in range(len(state.u))
    )
    inter = []
    for (a, b), w_c in sorted(state.w_cross.items()):
        lam = state.u[a] @ w_c @ state.u[b].T
        counts = rng.poisson(np.clip(lam, 0.0, None))
        ii, jj = np.nonzero(counts)
        entries = tuple(
            (int(i), int(j), float(counts[i, j])) for i, j in zip(ii, jj)
        )
        inter.append(InterEdgeSet(a, b, entries))
    return MultiHypergraph(layers, tuple(inter))


def planted_memberships(num_nodes: int, num_communities: int):
    """Equal-size contiguous community blocks; returns (labels, one-hot u)."""
    if num_communities < 1 or num_communities > num_nodes:
        raise ValueError("need 1 <= num_communities <= num_nodes")
    base = num_nodes // num_communities
    extra = num_nodes % num_communities
    sizes = [base + (1 if c < extra else 0) for c in range(num_communities)]
    labels = np.repeat(np.arange(num_communities), sizes)
    u = np.zeros((num_nodes, num_communities))
    u[np.arange(num_nodes), labels] = 1.0
    return labels, u


def planted_partition(
    num_nodes: int = 60,
    num_communities: int = 3,
    num_layers: int = 2,
    c_in: float = 0.1,
    c_out: float = 0.01,
    max_size: int = 3,
    inter_edge_count: int = 200,
    noise_fraction: float = 0.0,
    seed=0,
) -> MultiHypergraph:
    """Planted-partition benchmark: block-structured layers plus aligned links.

    Every layer is an independent exhaustive Poisson sample from one-hot
    memberships with affinity c_in on the diagonal and c_out off it
    (c_in > c_out plants assortative structure, c_in < c_out disassortative).
    Inter-edges follow the same community-aligned rule as build_views for
    every layer pair.  Ground truth is attached to all layers.
    """
    if c_in < 0 or c_out < 0:
        raise ValueError("affinities must be non-negative")
    if max_size < 2:
        raise ValueError("max_size must be >= 2")
    candidates = sum(math.comb(num_nodes, s) for s in range(2, max_size + 1))
    if candidates > _PLANTED_CANDIDATE_CAP:
        raise ValueError(
            f"{candidates} candidate node sets exceed the enumeration cap "
            f"{_PLANTED_CANDIDATE_CAP}; lower num_nodes or max_size"
        )
    labels, u = planted_memberships(num_nodes, num_communities)
    w = np.full((num_communities, num_communities), float(c_out))
    np.fill_diagonal(w, float(c_in))
    rng = np.random.default_rng(seed)
    truth = {i: int(labels[i]) for i in range(num_nodes)}
    layers = []
    for l in range(num_layers):
        layer = _poisson_layer(u, w, max_size, rng, ground_truth=truth)
        if layer.num_hyperedges == 0:
            raise RuntimeError(
                f"planted layer {l} came out empty; increase c_in/c_out or num_nodes"
            )
        layers.append(layer)
    noise = _ceil(noise_fraction * inter_edge_count)
    inter = []
    for a, b in combinations(range(num_layers), 2):
        pairs = _community_aligned_pairs(labels, labels, inter_edge_count, noise, rng)
        entries = tuple(sorted((i, j, 1.0) for i, j in pairs))
        inter.append(InterEdgeSet(a, b, entries))
    return MultiHypergraph(tuple(layers), tuple(inter))
