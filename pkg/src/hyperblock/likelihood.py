"""Poisson rate kernels and the approximated log-likelihood objective.

The rate of a hyperedge couples every node pair inside it through the
memberships u, the symmetric affinity w and the per-edge node contributions;
the rate of an inter-layer edge is the bilinear form u_i w_cross u_j.  The
intractable sum over all candidate hyperedges is replaced by the observed
set plus an equal-size sample of unobserved ones, which collapses into a
single per-layer constant multiplying the global pairwise interaction sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from scipy import sparse

from .core import Hyperedge, HypergraphLayer, MultiHypergraph
from .internal_degree import InternalDegreeTable

__all__ = [
    "DegenerateStateError",
    "LatentState",
    "LayerConstants",
    "ThetaIncidence",
    "mu",
    "lambda_e",
    "lambda_ij",
    "sample_negatives",
    "layer_constants",
    "pairwise_outer",
    "pairwise_interaction_sum",
    "surrogate_objective",
]

W_SYMMETRY_TOL = 1e-12


class DegenerateStateError(RuntimeError):
    """A zero Poisson rate was assigned to an observed interaction."""


@dataclass(frozen=True)
class LatentState:
    """All latent variables: per-layer u and w, per-layer-pair w_cross."""

    u: tuple[np.ndarray, ...]
    w: tuple[np.ndarray, ...]
    w_cross: dict[tuple[int, int], np.ndarray]

    def validate(self) -> None:
        for name, mats in (("u", self.u), ("w", self.w), ("w_cross", tuple(self.w_cross.values()))):
            for m in mats:
                if not np.all(np.isfinite(m)) or np.any(m < 0):
                    raise ValueError(f"{name} entries must be finite and non-negative")
        for l, w in enumerate(self.w):
            if w.shape[0] != w.shape[1] or np.max(np.abs(w - w.T), initial=0.0) > W_SYMMETRY_TOL:
                raise ValueError(f"w[{l}] must be symmetric")

    def copy(self) -> "LatentState":
        return LatentState(
            tuple(m.copy() for m in self.u),
            tuple(m.copy() for m in self.w),
            {k: m.copy() for k, m in self.w_cross.items()},
        )


@dataclass(frozen=True)
class LayerConstants:
    """Negative sample plus the closed-form penalty constant of one layer."""

    negatives: tuple[Hyperedge, ...]
    q_pairs: int
    m_count: int
    c_l: float


def mu(e_size: int) -> float:
    """Number of node pairs inside a hyperedge of the given size."""
    if e_size < 2:
        raise ValueError(f"hyperedge size must be >= 2, got {e_size}")
    return e_size * (e_size - 1) / 2.0


def _theta_vector(nodes: Sequence[int], theta) -> np.ndarray:
    if isinstance(theta, Mapping):
        return np.array([theta[n] for n in nodes], dtype=float)
    arr = np.asarray(theta, dtype=float)
    if arr.shape != (len(nodes),):
        raise ValueError(f"theta has shape {arr.shape}, expected ({len(nodes)},)")
    return arr


def lambda_e(e: Union[Hyperedge, Sequence[int]], theta, u: np.ndarray, w: np.ndarray) -> float:
    """Hyperedge rate: sum over node pairs of the contribution-weighted

    bilinear form.  Computed through the factored contraction
    0.5 * (s w s^T - sum_i x_i w x_i^T) with x_i the contribution-scaled
    membership row and s their sum; valid because w is symmetric.
    """
    nodes = e.nodes if isinstance(e, Hyperedge) else tuple(e)
    x = _theta_vector(nodes, theta)[:, None] * u[list(nodes), :]
    s = x.sum(axis=0)
    self_terms = ((x @ w) * x).sum()
    return float(0.5 * (s @ w @ s - self_terms))


def lambda_ij(u_i: np.ndarray, u_j: np.ndarray, w_cross: np.ndarray) -> float:
    """Inter-layer edge rate u_i w_cross u_j."""
    u_i = np.asarray(u_i, dtype=float)
    u_j = np.asarray(u_j, dtype=float)
    if w_cross.shape != (u_i.shape[0], u_j.shape[0]):
        raise ValueError(
            f"w_cross has shape {w_cross.shape}, expected {(u_i.shape[0], u_j.shape[0])}"
        )
    return float(u_i @ w_cross @ u_j)


def sample_negatives(
    layer: HypergraphLayer,
    seed: int,
    sizes: Optional[Sequence[int]] = None,
    forbidden: Optional[set[tuple[int, ...]]] = None,
    max_attempts: int = 1000,
) -> list[Hyperedge]:
    """Sample unobserved hyperedges matching the observed size multiset.

    One zero-weight hyperedge per requested size, drawn uniformly over node
    sets and rejected while observed (or in ``forbidden``) or already drawn.
    Deterministic given the seed.
    """
    rng = np.random.default_rng(seed)
    if sizes is None:
        sizes = layer.sizes()
    taken = set(forbidden) if forbidden is not None else layer.node_sets()
    negatives = []
    n = layer.num_nodes
    for size in sizes:
        if size > n:
            raise ValueError(f"cannot sample a hyperedge of size {size} from {n} nodes")
        for _ in range(max_attempts):
            candidate = tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))
            if candidate not in taken:
                taken.add(candidate)
                negatives.append(Hyperedge(candidate, 0.0))
                break
        else:
            raise ValueError(
                f"failed to sample an unobserved hyperedge of size {size} "
                f"after {max_attempts} attempts (space exhausted?)"
            )
    return negatives


def layer_constants(
    layer: HypergraphLayer,
    negatives: Sequence[Hyperedge],
    m_override: Optional[int] = None,
) -> LayerConstants:
    """Pair count, edge count and the positive penalty constant of a layer.

    The constant is m * (1/q + 2/(n(n-1))) and enters the objective with a
    minus sign; it depends on hyperedge counts and sizes, never on weights.
    """
    if sorted(e.size for e in negatives) != sorted(layer.sizes()):
        raise ValueError("negative sizes must match the observed size multiset")
    observed = layer.node_sets()
    for e in negatives:
        if e.nodes in observed:
            raise ValueError(f"negative {e.nodes} is an observed hyperedge")
    q = sum(s * (s - 1) // 2 for s in layer.sizes())
    if q == 0:
        raise ValueError("layer has no hyperedges")
    m = int(m_override) if m_override is not None else layer.num_hyperedges
    n = layer.num_nodes
    c_l = m * (1.0 / q + 2.0 / (n * (n - 1)))
    return LayerConstants(tuple(negatives), q_pairs=q, m_count=m, c_l=c_l)


class ThetaIncidence:
    """Contribution-weighted sparse incidence (nodes x hyperedges) of a layer.

    Carries the machinery shared by rate evaluation and the EM updates:
    ``b`` holds the per-(node, edge) contribution, ``b2`` its square.
    """

    def __init__(self, layer: HypergraphLayer, table: InternalDegreeTable):
        rows, cols, data = [], [], []
        for eid, e in enumerate(layer.hyperedges):
            th = table.for_edge(eid)
            rows.extend(e.nodes)
            cols.extend([eid] * e.size)
            data.extend(th.tolist())
        shape = (layer.num_nodes, layer.num_hyperedges)
        self.b = sparse.csr_matrix((data, (rows, cols)), shape=shape)
        self.b2 = self.b.multiply(self.b).tocsr()
        self.weights = layer.weights()

    def edge_sums(self, u: np.ndarray) -> np.ndarray:
        """s_e = sum_{i in e} theta_ie u_i, one row per hyperedge."""
        return np.asarray(self.b.T @ u)

    def edge_rates(self, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        """All observed-hyperedge rates at once via the factored contraction."""
        s = self.edge_sums(u)
        first = ((s @ w) * s).sum(axis=1)
        second = np.asarray(self.b2.T @ ((u @ w) * u).sum(axis=1)).ravel()
        return 0.5 * (first - second)


def pairwise_outer(u: np.ndarray) -> np.ndarray:
    """Symmetrized sum of u_i (x) u_j over all unordered node pairs."""
    s = u.sum(axis=0)
    return 0.5 * (np.outer(s, s) - u.T @ u)


def pairwise_interaction_sum(u: np.ndarray, w: np.ndarray) -> float:
    """sum_{i<j} u_i w u_j^T over all node pairs of a layer (w symmetric)."""
    return float(np.sum(w * pairwise_outer(u)))


def surrogate_objective(
    mh: MultiHypergraph,
    tables: Sequence[InternalDegreeTable],
    state: LatentState,
    consts: Sequence[LayerConstants],
    incidences: Optional[Sequence[ThetaIncidence]] = None,
) -> float:
    """Approximated log-likelihood at the closed-form variational optimum.

    Per layer: -c_l * (global pairwise interaction sum) plus the weighted
    log-rates of observed hyperedges.  Per layer pair: minus the total
    cross rate over all node pairs (a column-sum contraction) plus the
    weighted log-rates of observed inter-edges.  Raises
    DegenerateStateError when an observed interaction has zero rate.
    """
    if incidences is None:
        incidences = [ThetaIncidence(layer, table) for layer, table in zip(mh.layers, tables)]
    total = 0.0
    for l, layer in enumerate(mh.layers):
        u, w = state.u[l], state.w[l]
        total -= consts[l].c_l * pairwise_interaction_sum(u, w)
        rates = incidences[l].edge_rates(u, w)
        weights = incidences[l].weights
        observed = weights > 0
        if np.any(rates[observed] <= 0):
            raise DegenerateStateError(f"zero rate on observed hyperedge in layer {l}")
        total += float(weights[observed] @ np.log(rates[observed]))
    for s in mh.inter_edges:
        ua, ub = state.u[s.layer_a], state.u[s.layer_b]
        w_cross = state.w_cross[(s.layer_a, s.layer_b)]
        total -= float(ua.sum(axis=0) @ w_cross @ ub.sum(axis=0))
        for i, j, weight in s.edges:
            rate = float(ua[i] @ w_cross @ ub[j])
            if rate <= 0:
                raise DegenerateStateError(
                    f"zero rate on observed inter-edge ({i}, {j}) of pair "
                    f"({s.layer_a}, {s.layer_b})"
                )
            total += weight * np.log(rate)
    return total
