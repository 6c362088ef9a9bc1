"""Exact solutions and optimality certificates for the L1 family.

Everything here is independent of the solver: the L1 family separates by
coordinate, and each coordinate is a 1-D problem

    min_u  (w/n) sum_i |u - c_i| + (r/2) u^2

solved exactly by scanning the sorted breakpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gossip import project_consensus_complement
from .problems import ProblemInstance


class CertificateError(RuntimeError):
    """The supplied point admits no optimality certificate."""


def solve_1d_exact(centers, weight_r: float, weight: float = 1.0) -> float:
    """Minimizer of ``(weight/n) sum |u - c_i| + (weight_r/2) u^2``.

    For ``weight_r = 0`` the minimizer set is an interval of medians; the
    lower median is returned.
    """
    c = np.sort(np.asarray(centers, dtype=float).ravel())
    n = c.size
    if weight_r < 0:
        raise ValueError("weight_r must be non-negative")
    if n == 0:
        if weight_r == 0:
            raise ValueError("empty centers with r = 0 has no minimizer")
        return 0.0
    if weight_r == 0:
        return float(c[(n - 1) // 2])

    h = weight / n
    values, counts = np.unique(c, return_counts=True)
    below = 0
    prev = -np.inf
    for v, eq in zip(values, counts):
        above = n - below - eq
        # on (prev, v) the subgradient is r*u + h*(below - above - eq)
        s_left = below - above - eq
        if weight_r * v + h * s_left > 0:
            u = -h * s_left / weight_r
            return float(min(max(u, prev), v))
        if weight_r * v + h * (below - above + eq) >= 0:
            return float(v)
        below += eq
        prev = v
    return float(max(-h * n / weight_r, prev))


def solve_l1_instance(pb: ProblemInstance) -> np.ndarray:
    """Exact solution (minimizer or saddle point) of an L1-family instance.

    The zeta block maximizes ``-(w/n) sum|zeta - c| - (r/2) zeta^2``, which is
    the same 1-D problem as the xi block.
    """
    x = np.empty(pb.dim)
    C, w = pb.centers, pb.weights
    for j in range(pb.dim):
        x[j] = solve_1d_exact(C[:, j], pb.r, w[j])
    return x


@dataclass
class Certificate:
    """Stacked optimality witnesses ``(w*, y*, z*)`` and per-node selections."""

    w_star: np.ndarray
    y_star: np.ndarray
    z_star: np.ndarray
    delta_star: np.ndarray
    residual: float
    r_x: float
    r_yz: float


def build_certificate(pb: ProblemInstance, x_star, r_x: float | None = None, tol: float = 1e-9) -> Certificate:
    """Construct witnesses for ``0 in A(u) + B(u)`` at the solution ``x_star``.

    Node selections ``delta_i in T_i(x*)`` are forced off the kinks.  At kink
    coordinates the remaining mass needed for ``r x* + mean_i delta_i = 0`` is
    distributed greedily over the kink nodes, clamped to ``[-w, w]``.
    """
    if pb.r <= 0:
        raise ValueError("certificates need r > 0")
    x_star = np.asarray(x_star, dtype=float)
    n, D = pb.n_nodes, pb.dim
    r = pb.r
    r_x = (2.0 / 3.0) * r if r_x is None else r_x
    r_yz = 1.0 / (r - r_x)
    C, w = pb.centers, pb.weights

    kink = C == x_star
    delta = np.where(kink, 0.0, w * np.sign(x_star - C))
    for j in range(D):
        need = -n * r * x_star[j] - delta[~kink[:, j], j].sum()
        for i in np.flatnonzero(kink[:, j]):
            d = min(max(need, -w[j]), w[j])
            delta[i, j] = d
            need -= d
        if abs(need) > tol * n * max(1.0, w[j]):
            raise CertificateError(f"coordinate {j}: no subgradient selection makes x* stationary")

    residual = float(np.max(np.abs(r * x_star + delta.mean(axis=0))))
    W = np.tile(x_star, (n, 1))
    return Certificate(
        w_star=W,
        y_star=delta + r_x * W,
        z_star=-delta - r * W,
        delta_star=delta,
        residual=residual,
        r_x=r_x,
        r_yz=r_yz,
    )


def _box_distance(pb: ProblemInstance, X, V) -> float:
    """Largest coordinate distance of ``V[i]`` from the set ``T_i(X[i])``."""
    C, w = pb.centers, pb.weights
    kink = C == X
    off = np.abs(V - w * np.sign(X - C))
    on = np.maximum(np.abs(V) - w, 0.0)
    return float(np.max(np.where(kink, on, off)))


def inclusion_residual(cert: Certificate, pb: ProblemInstance, r_x: float, r_yz: float) -> float:
    """Max violation of the three block conditions of ``0 in A(u) + B(u)``.

    Blocks: ``y - r_x w in [T_i(w_i)]``; ``r_yz (y + z) + w = 0``;
    ``P r_yz (y + z) = 0`` together with ``z`` zero-sum and ``w`` consensual.
    """
    if not np.isclose(r_x + 1.0 / r_yz, pb.r, rtol=1e-12, atol=1e-15):
        raise ValueError(f"parameters violate r_x + 1/r_yz = r ({r_x} + 1/{r_yz} != {pb.r})")
    Wst, Y, Z = cert.w_star, cert.y_star, cert.z_star
    membership = _box_distance(pb, Wst, Y - r_x * Wst)
    grad = r_yz * (Y + Z)
    x_block = float(np.max(np.abs(grad + Wst)))
    proj_block = max(
        float(np.max(np.abs(project_consensus_complement(grad)))),
        float(np.max(np.abs(Z.sum(axis=0)))),
        float(np.max(np.abs(project_consensus_complement(Wst)))),
    )
    return max(membership, x_block, proj_block)


def certificate_norm_bounds(cert: Certificate, pb: ProblemInstance) -> dict[str, tuple[float, float]]:
    """``{name: (squared norm, bound)}`` for ``w*``, ``y*`` and ``z*``."""
    n, M, r = pb.n_nodes, pb.M, pb.r
    return {
        "w_star": (float(np.sum(cert.w_star**2)), 2 * n * M**2 / r**2),
        "y_star": (float(np.sum(cert.y_star**2)), 2 * (1 + cert.r_x / r) ** 2 * n * M**2),
        "z_star": (float(np.sum(cert.z_star**2)), 8 * n * M**2),
    }


def contraction_probe(W, chi: float, trials: int, seed: int) -> float:
    """Worst observed ``|Wx - x|^2 / |x|^2`` over random zero-sum ``x``.

    ``chi`` is accepted for symmetry with callers that compare against
    ``1 - 1/chi``; it does not influence the sampling.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    if n < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, trials))
    X -= X.mean(axis=0)
    num = np.sum((W @ X - X) ** 2, axis=0)
    den = np.sum(X**2, axis=0)
    return float(np.max(num / den))
