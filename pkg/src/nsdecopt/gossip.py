"""Gossip matrices, condition-number certification and blockwise mixing.

Stacked vectors are plain ``(n_blocks, block_dim)`` float arrays: row ``i``
is node ``i``'s local copy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .netgraph import DisconnectedGraphError, TimeVaryingGraph, is_connected


def laplacian(edges, n: int) -> np.ndarray:
    L = np.zeros((n, n))
    for u, v in edges:
        L[u, v] -= 1.0
        L[v, u] -= 1.0
        L[u, u] += 1.0
        L[v, v] += 1.0
    return L


def _spectrum(edges, n: int) -> tuple[np.ndarray, np.ndarray]:
    if not is_connected(edges, n):
        raise DisconnectedGraphError("gossip matrix needs a connected edge set")
    L = laplacian(edges, n)
    return L, np.linalg.eigvalsh(L)


def build_gossip(edges, n: int) -> np.ndarray:
    """Return ``W = L / lambda_max(L)`` for the combinatorial Laplacian ``L``.

    Row and column sums are exactly zero and off-diagonal entries vanish for
    non-adjacent pairs.  On the zero-sum subspace the eigenvalues lie in
    ``(0, 1]``.
    """
    if n == 1:
        return np.zeros((1, 1))
    L, ev = _spectrum(edges, n)
    return L / ev[-1]


def chi_of_edges(edges, n: int) -> float:
    """Smallest chi with ``(1 - mu)^2 <= 1 - 1/chi`` for all zero-sum eigenvalues mu."""
    if n == 1:
        return 1.0
    _, ev = _spectrum(edges, n)
    # ev[0] is the consensus direction; the rest span the zero-sum subspace
    mu = ev[1:] / ev[-1]
    worst = float(np.max((1.0 - mu) ** 2))
    return 1.0 / (1.0 - worst)


def certify_chi(graph: TimeVaryingGraph, rounds: int) -> float:
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    return max(chi_of_edges(graph.edges_at(k), graph.n_nodes) for k in range(rounds))


def apply_gossip(W: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Compute ``(W kron I) x`` without forming the Kronecker product."""
    x = np.asarray(x, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1] or x.ndim != 2 or x.shape[0] != W.shape[1]:
        raise ValueError(f"cannot mix {x.shape} with a {W.shape} gossip matrix")
    return W @ x


def project_consensus_complement(x: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the zero-block-sum subspace."""
    x = np.asarray(x, dtype=float)
    return x - x.mean(axis=0, keepdims=True)


@dataclass
class GossipOperator:
    """Per-round gossip matrices for a graph, with a certified chi.

    Matrices are cached by round.  ``chi`` is the maximum over the rounds
    ``0..rounds-1`` passed at construction; querying a later round extends
    the cache but does not change ``chi``.
    """

    graph: TimeVaryingGraph
    rounds: int = 1
    chi: float = field(init=False)
    round_chis: list[float] = field(init=False, repr=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        n = self.graph.n_nodes
        self.round_chis = []
        static = self.graph.schedule_kind.value == "static"
        for k in range(1 if static else self.rounds):
            edges = self.graph.edges_at(k)
            self.round_chis.append(chi_of_edges(edges, n))
            self._cache[k] = build_gossip(edges, n)
        self.chi = max(self.round_chis)

    def matrix(self, k: int) -> np.ndarray:
        if self.graph.schedule_kind.value == "static":
            return self._cache[0]
        if k not in self._cache:
            self._cache[k] = build_gossip(self.graph.edges_at(k), self.graph.n_nodes)
        return self._cache[k]

    def __call__(self, k: int, x: np.ndarray) -> np.ndarray:
        return apply_gossip(self.matrix(k), x)


class ProjectionOperator:
    """Stand-in for :class:`GossipOperator` that mixes with the exact projection."""

    chi = 1.0

    def __call__(self, k: int, x: np.ndarray) -> np.ndarray:
        return project_consensus_complement(x)
