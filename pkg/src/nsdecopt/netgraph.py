"""Time-varying communication graphs with replayable edge schedules.

Nodes are indexed ``0..n-1``.  Edges are stored as sorted ``(u, v)`` tuples
with ``u < v`` inside a ``frozenset``, so an edge set is hashable and
comparable by value.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

Edge = tuple[int, int]
EdgeSet = frozenset


class DisconnectedGraphError(ValueError):
    """Raised when a graph that must be connected is not."""


class ScheduleKind(str, enum.Enum):
    STATIC = "static"
    EDGE_CHURN = "churn"


def _edge(u: int, v: int) -> Edge:
    if u == v:
        raise ValueError(f"self-loop on node {u}")
    return (u, v) if u < v else (v, u)


def normalize_edges(edges, n: int) -> frozenset[Edge]:
    out = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u}, {v}) outside node range 0..{n - 1}")
        out.add(_edge(u, v))
    return frozenset(out)


def is_connected(edges, n: int) -> bool:
    """True iff the undirected graph on ``n`` nodes is a single component."""
    if n <= 1:
        return True
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == n


@dataclass(frozen=True)
class TimeVaryingGraph:
    """Node count plus a deterministic edge schedule ``E(k)``.

    ``edges_at(k)`` is a pure function of the fields and ``k``.
    """

    n_nodes: int
    base_edges: frozenset[Edge]
    schedule_kind: ScheduleKind = ScheduleKind.STATIC
    churn_rate: float = 0.0
    seed: int = 0
    rejections: int = field(default=0, compare=False)
    max_toggle_retries: int = field(default=50, compare=False)

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be positive")
        object.__setattr__(self, "base_edges", normalize_edges(self.base_edges, self.n_nodes))
        object.__setattr__(self, "schedule_kind", ScheduleKind(self.schedule_kind))
        if not 0.0 <= self.churn_rate <= 1.0:
            raise ValueError("churn_rate must lie in [0, 1]")
        if not is_connected(self.base_edges, self.n_nodes):
            raise DisconnectedGraphError("base edge set is not connected")

    def with_churn(self, churn_rate: float, seed: int | None = None) -> "TimeVaryingGraph":
        return TimeVaryingGraph(
            n_nodes=self.n_nodes,
            base_edges=self.base_edges,
            schedule_kind=ScheduleKind.EDGE_CHURN,
            churn_rate=churn_rate,
            seed=self.seed if seed is None else seed,
            rejections=self.rejections,
        )

    def n_toggles(self) -> int:
        return math.ceil(self.churn_rate * len(self.base_edges))

    def edges_at(self, k: int) -> frozenset[Edge]:
        """Edge set used in communication round ``k``.

        For churn schedules, ``ceil(churn_rate * |base|)`` random node pairs
        are toggled relative to the base set.  A proposal that would
        disconnect the graph is redrawn up to ``max_toggle_retries`` times and
        then dropped.
        """
        if k < 0:
            raise ValueError("round index must be non-negative")
        if self.schedule_kind is ScheduleKind.STATIC or self.n_toggles() == 0 or self.n_nodes < 2:
            return self.base_edges

        n = self.n_nodes
        rng = np.random.default_rng([self.seed & 0xFFFFFFFFFFFFFFFF, k])
        edges = set(self.base_edges)
        for _ in range(self.n_toggles()):
            for _ in range(self.max_toggle_retries):
                u, v = rng.choice(n, size=2, replace=False)
                e = _edge(int(u), int(v))
                if e in edges:
                    edges.discard(e)
                    if is_connected(edges, n):
                        break
                    edges.add(e)
                else:
                    edges.add(e)
                    break
        return frozenset(edges)


def generate_erdos_renyi(n: int, p: float, seed: int, max_resamples: int = 1000) -> TimeVaryingGraph:
    """Static G(n, p) sample, resampled until connected."""
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    for attempt in range(max_resamples):
        mask = rng.random(iu.size) < p
        edges = frozenset(zip(iu[mask].tolist(), ju[mask].tolist()))
        if is_connected(edges, n):
            return TimeVaryingGraph(n_nodes=n, base_edges=edges, seed=seed, rejections=attempt)
    raise DisconnectedGraphError(
        f"no connected G({n}, {p}) sample in {max_resamples} draws; p is too small for n"
    )


def complete_graph(n: int) -> TimeVaryingGraph:
    return TimeVaryingGraph(n_nodes=n, base_edges=frozenset(zip(*np.triu_indices(n, k=1))))


def path_graph(n: int) -> TimeVaryingGraph:
    return TimeVaryingGraph(n_nodes=n, base_edges=frozenset((i, i + 1) for i in range(n - 1)))


def write_edge_list(path, edges, n: int, k: int = 0) -> None:
    lines = [f"n={n} k={k}"]
    lines += [f"{u} {v}" for u, v in sorted(edges)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> tuple[frozenset[Edge], int, int]:
    """Inverse of :func:`write_edge_list`; returns ``(edges, n, k)``."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    header = dict(tok.split("=") for tok in lines[0].split())
    n, k = int(header["n"]), int(header["k"])
    edges = normalize_edges((tuple(map(int, ln.split())) for ln in lines[1:]), n)
    return edges, n, k


def edges_at(g: TimeVaryingGraph, k: int) -> frozenset[Edge]:
    return g.edges_at(k)
