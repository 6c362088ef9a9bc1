"""Per-node monotone operators for the L1 problem family, plus objectives and gaps.

Each node holds a pair of centers and the local function

    f_i(xi, zeta) = w_xi * |xi - c_xi_i|_1 - w_zeta * |zeta - c_zeta_i|_1

(``w_xi = w_zeta = 1`` for the plain family; other weights only arise from
:func:`rescale_asymmetric`).  The global objective is

    p(xi, zeta) = mean_i f_i(xi, zeta) + r/2 |xi|^2 - r/2 |zeta|^2

and the convex-minimization variant simply has ``d_zeta = 0``.

The operator ``T_i`` stacks ``d_xi f_i`` and ``-d_zeta f_i``.  For this family
both halves reduce to ``w * sign(x - c)`` coordinate-wise (with the
kink value 0), so ``T_i`` is the subdifferential of a convex function and is
monotone.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np


class ProblemKind(str, enum.Enum):
    CONVEX = "convex"
    SADDLE = "saddle"


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """An L1-family instance distributed over ``n_nodes`` nodes.

    ``centers_xi`` has shape ``(n, d_xi)`` and ``centers_zeta`` shape
    ``(n, d_zeta)``; the latter is empty for convex problems.
    """

    kind: ProblemKind
    centers_xi: np.ndarray
    centers_zeta: np.ndarray
    r: float = 0.0
    weight_xi: float = 1.0
    weight_zeta: float = 1.0
    lipschitz_bound: float | None = None
    radius_bound: float | None = None

    def __post_init__(self):
        kind = ProblemKind(self.kind)
        cx = np.atleast_2d(np.asarray(self.centers_xi, dtype=float))
        cz = np.asarray(self.centers_zeta, dtype=float).reshape(cx.shape[0], -1)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "centers_xi", cx)
        object.__setattr__(self, "centers_zeta", cz)
        if kind is ProblemKind.CONVEX and cz.shape[1] != 0:
            raise ValueError("convex problems have no zeta block")
        if self.r < 0:
            raise ValueError("r must be non-negative")
        if self.weight_xi <= 0 or self.weight_zeta <= 0:
            raise ValueError("block weights must be positive")

    @property
    def n_nodes(self) -> int:
        return self.centers_xi.shape[0]

    @property
    def d_xi(self) -> int:
        return self.centers_xi.shape[1]

    @property
    def d_zeta(self) -> int:
        return self.centers_zeta.shape[1]

    @property
    def dim(self) -> int:
        return self.d_xi + self.d_zeta

    @property
    def centers(self) -> np.ndarray:
        """All centers as one ``(n, dim)`` array."""
        return np.hstack([self.centers_xi, self.centers_zeta])

    @property
    def weights(self) -> np.ndarray:
        return np.concatenate([np.full(self.d_xi, self.weight_xi), np.full(self.d_zeta, self.weight_zeta)])

    @property
    def M(self) -> float:
        """Bound on the norm of every operator selection."""
        if self.lipschitz_bound is not None:
            return self.lipschitz_bound
        return math.sqrt(self.d_xi * self.weight_xi**2 + self.d_zeta * self.weight_zeta**2)

    @property
    def R_bound(self) -> float:
        # every solution lies in the box spanned by the centers and the origin
        if self.radius_bound is not None:
            return self.radius_bound
        return float(np.sqrt(np.sum(np.max(self.centers**2, axis=0))))

    def split(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected last dimension {self.dim}, got {x.shape}")
        return x[..., : self.d_xi], x[..., self.d_xi :]

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind.value,
            "n_nodes": self.n_nodes,
            "d_xi": self.d_xi,
            "d_zeta": self.d_zeta,
            "r": self.r,
            "weight_xi": self.weight_xi,
            "weight_zeta": self.weight_zeta,
            "centers_xi": self.centers_xi.tolist(),
            "centers_zeta": self.centers_zeta.tolist(),
        }
        if self.lipschitz_bound is not None:
            d["lipschitz_bound"] = self.lipschitz_bound
        if self.radius_bound is not None:
            d["radius_bound"] = self.radius_bound
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemInstance":
        n, dz = d["n_nodes"], d["d_zeta"]
        return cls(
            kind=d["kind"],
            centers_xi=np.asarray(d["centers_xi"], dtype=float).reshape(n, d["d_xi"]),
            centers_zeta=np.asarray(d["centers_zeta"], dtype=float).reshape(n, dz),
            r=d["r"],
            weight_xi=d.get("weight_xi", 1.0),
            weight_zeta=d.get("weight_zeta", 1.0),
            lipschitz_bound=d.get("lipschitz_bound"),
            radius_bound=d.get("radius_bound"),
        )


def write_problem(path, pb: ProblemInstance) -> None:
    Path(path).write_text(json.dumps(pb.to_dict(), indent=2) + "\n")


def read_problem(path) -> ProblemInstance:
    return ProblemInstance.from_dict(json.loads(Path(path).read_text()))


def make_l1_saddle(n: int, d_xi: int, d_zeta: int, r: float, seed: int, spread: float = 1.0) -> ProblemInstance:
    """Saddle instance with centers drawn uniformly from ``[-spread, spread]``."""
    rng = np.random.default_rng(seed)
    c = rng.uniform(-spread, spread, size=(n, d_xi + d_zeta))
    return ProblemInstance(ProblemKind.SADDLE, c[:, :d_xi], c[:, d_xi:], r=r)


def make_l1_convex(n: int, d: int, r: float, seed: int, spread: float = 1.0) -> ProblemInstance:
    rng = np.random.default_rng(seed)
    c = rng.uniform(-spread, spread, size=(n, d))
    return ProblemInstance(ProblemKind.CONVEX, c, np.zeros((n, 0)), r=r)


# ---------------------------------------------------------------- objectives


def local_values(pb: ProblemInstance, x) -> np.ndarray:
    """``f_i(x)`` for every node ``i`` at a single point ``x``."""
    xi, zeta = pb.split(x)
    return pb.weight_xi * np.abs(xi - pb.centers_xi).sum(axis=1) - pb.weight_zeta * np.abs(
        zeta - pb.centers_zeta
    ).sum(axis=1)


def evaluate_f(pb: ProblemInstance, x) -> float:
    """Unregularized mean objective ``(1/n) sum_i f_i(x)``."""
    return float(np.mean(local_values(pb, x)))


def evaluate_p(pb: ProblemInstance, x) -> float:
    xi, zeta = pb.split(x)
    return evaluate_f(pb, x) + 0.5 * pb.r * float(xi @ xi) - 0.5 * pb.r * float(zeta @ zeta)


def evaluate_p_saddle(pb: ProblemInstance, xi, zeta) -> float:
    return evaluate_p(pb, np.concatenate([np.atleast_1d(xi), np.atleast_1d(zeta)]))


def gap_cvx(pb: ProblemInstance, x_o, x_star) -> float:
    return evaluate_p(pb, x_o) - evaluate_p(pb, x_star)


def gap_spp(pb: ProblemInstance, x_o, x_star) -> float:
    """``p(xi_o, zeta*) - p(xi*, zeta_o)`` for full points ``x = (xi, zeta)``."""
    xi_o, zeta_o = pb.split(x_o)
    xi_s, zeta_s = pb.split(x_star)
    return evaluate_p_saddle(pb, xi_o, zeta_s) - evaluate_p_saddle(pb, xi_s, zeta_o)


def gap(pb: ProblemInstance, x_o, x_star) -> float:
    if pb.kind is ProblemKind.CONVEX:
        return gap_cvx(pb, x_o, x_star)
    return gap_spp(pb, x_o, x_star)


# ------------------------------------------------------------------ oracles


def operator_selection(pb: ProblemInstance, X) -> np.ndarray:
    """Canonical element of ``T_i(X[i])`` for every row of ``X`` (0 at kinks)."""
    X = np.asarray(X, dtype=float)
    if X.shape != (pb.n_nodes, pb.dim):
        raise ValueError(f"expected stacked shape {(pb.n_nodes, pb.dim)}, got {X.shape}")
    return pb.weights * np.sign(X - pb.centers)


@dataclass(frozen=True)
class OperatorOracle:
    """Stochastic operator oracle with replayable Gaussian noise.

    Noise for query ``(i, k, t)`` comes from a Philox stream keyed by
    ``rng_seed`` with the counter set to ``(t, k, i, 0)``, so the draw does
    not depend on the order in which nodes are queried.  Each coordinate has
    variance ``sigma^2 / dim``, hence ``E|noise|^2 = sigma^2``.
    """

    problem: ProblemInstance
    noise_sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")

    def query_deterministic(self, i: int, x) -> np.ndarray:
        pb = self.problem
        x = np.asarray(x, dtype=float)
        if x.shape != (pb.dim,):
            raise ValueError(f"expected a point of dimension {pb.dim}, got shape {x.shape}")
        return pb.weights * np.sign(x - pb.centers[i])

    def noise(self, i: int, k: int, t: int) -> np.ndarray:
        dim = self.problem.dim
        if self.noise_sigma == 0.0:
            return np.zeros(dim)
        bits = np.random.Philox(key=self.rng_seed % 2**64, counter=[t, k, i, 0])
        return np.random.Generator(bits).standard_normal(dim) * (self.noise_sigma / math.sqrt(dim))

    def query_stochastic(self, i: int, x, k: int, t: int) -> np.ndarray:
        g = self.query_deterministic(i, x)
        if self.noise_sigma == 0.0:
            return g
        return g + self.noise(i, k, t)

    def query_all(self, X, k: int, t: int) -> np.ndarray:
        """Stochastic selections for every node at stacked point ``X``."""
        G = operator_selection(self.problem, X)
        if self.noise_sigma > 0.0:
            G = G + np.stack([self.noise(i, k, t) for i in range(self.problem.n_nodes)])
        return G


@dataclass(frozen=True)
class ZeroOracle:
    """Oracle of the trivial operator ``T_i = 0``."""

    n_nodes: int
    dim: int

    def query_all(self, X, k: int, t: int) -> np.ndarray:
        return np.zeros((self.n_nodes, self.dim))


# --------------------------------------------------------------- transforms


@dataclass(frozen=True)
class AsymmetricRegularization:
    r_xi: float
    r_zeta: float

    def __post_init__(self):
        if not (self.r_xi > 0 and self.r_zeta > 0):
            raise ValueError("both regularization constants must be strictly positive")


def evaluate_p_asymmetric(pb: ProblemInstance, ar: AsymmetricRegularization, x) -> float:
    xi, zeta = pb.split(x)
    return evaluate_f(pb, x) + 0.5 * ar.r_xi * float(xi @ xi) - 0.5 * ar.r_zeta * float(zeta @ zeta)


def gap_spp_asymmetric(pb: ProblemInstance, ar: AsymmetricRegularization, x_o, x_star) -> float:
    xi_o, zeta_o = pb.split(x_o)
    xi_s, zeta_s = pb.split(x_star)
    return evaluate_p_asymmetric(pb, ar, np.concatenate([xi_o, zeta_s])) - evaluate_p_asymmetric(
        pb, ar, np.concatenate([xi_s, zeta_o])
    )


@dataclass(frozen=True)
class CoordinateMap:
    """Linear change of variables ``x_new = scale * x_old`` (coordinate-wise)."""

    scale: np.ndarray

    def forward(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) * self.scale

    def back(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) / self.scale


def rescale_asymmetric(
    pb: ProblemInstance, ar: AsymmetricRegularization
) -> tuple[ProblemInstance, CoordinateMap]:
    """Turn an ``(r_xi, r_zeta)``-regularized saddle problem into one with ``r = 1``.

    New coordinates are ``xi' = sqrt(r_xi) xi`` and ``zeta' = sqrt(r_zeta) zeta``,
    and ``f'_i(xi', zeta') = f_i(xi'/sqrt(r_xi), zeta'/sqrt(r_zeta))``.  For the L1
    family that means centers scaled by ``sqrt(r)`` and block weights by
    ``1/sqrt(r)``.  The returned map sends original points to new ones and
    back; ``p'(map.forward(x)) == p_asym(x)``.
    """
    if pb.kind is not ProblemKind.SADDLE:
        raise ValueError("rescaling applies to saddle problems")
    sx, sz = math.sqrt(ar.r_xi), math.sqrt(ar.r_zeta)
    new = ProblemInstance(
        ProblemKind.SADDLE,
        pb.centers_xi * sx,
        pb.centers_zeta * sz,
        r=1.0,
        weight_xi=pb.weight_xi / sx,
        weight_zeta=pb.weight_zeta / sz,
        lipschitz_bound=pb.M * math.sqrt(1.0 / ar.r_xi + 1.0 / ar.r_zeta),
    )
    scale = np.concatenate([np.full(pb.d_xi, sx), np.full(pb.d_zeta, sz)])
    return new, CoordinateMap(scale)


def regularize_monotone(pb: ProblemInstance, eps: float) -> ProblemInstance:
    """Set ``r = eps / R^2`` on a monotone (``r = 0``) problem.

    An ``eps``-solution of the result is a ``2 eps``-solution of the original.
    """
    if pb.r != 0:
        raise ValueError("problem is already regularized")
    if eps <= 0:
        raise ValueError("eps must be positive")
    R = pb.R_bound
    if not (np.isfinite(R) and R > 0):
        raise ValueError("regularization needs a finite positive radius bound")
    return replace(pb, r=eps / R**2)
