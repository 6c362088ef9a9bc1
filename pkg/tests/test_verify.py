import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsdecopt.problems import ProblemInstance, ProblemKind, gap, make_l1_convex, make_l1_saddle
from nsdecopt.verify import (
    CertificateError,
    build_certificate,
    certificate_norm_bounds,
    inclusion_residual,
    solve_1d_exact,
    solve_l1_instance,
)


def grid_minimizer(centers, r, weight=1.0, points=200_001):
    """Brute-force oracle: dense grid around the centers and the origin."""
    c = np.asarray(centers, float)
    lo, hi = min(c.min(), 0.0) - 1, max(c.max(), 0.0) + 1
    u = np.linspace(lo, hi, points)
    obj = weight * np.abs(u[:, None] - c[None, :]).mean(axis=1) + 0.5 * r * u**2
    return u, obj


def objective(centers, r, u, weight=1.0):
    return weight * np.abs(u - np.asarray(centers)).mean() + 0.5 * r * u**2


def test_1d_examples():
    assert solve_1d_exact([-1.0, 1.0], 1.0) == 0.0
    assert solve_1d_exact([2.0], 1.0) == 1.0
    assert solve_1d_exact([0.0, 0.0, 10.0], 0.0) == 0.0
    assert solve_1d_exact([1.0, 3.0], 0.0) == 1.0  # lower median
    with pytest.raises(ValueError):
        solve_1d_exact([], 0.0)


@settings(max_examples=100, deadline=None)
@given(
    centers=st.lists(st.floats(-5, 5), min_size=1, max_size=7),
    r=st.sampled_from([0.0, 1e-3, 0.1, 1.0, 10.0]),
    weight=st.sampled_from([1.0, 0.5, 2.0]),
)
def test_1d_against_grid(centers, r, weight):
    u, obj = grid_minimizer(centers, r, weight)
    h = u[1] - u[0]
    exact = objective(centers, r, solve_1d_exact(centers, r, weight), weight)
    assert exact <= obj.min() + 1e-12
    lipschitz = weight + r * np.abs(u).max()
    assert obj.min() <= exact + lipschitz * h


def test_l1_instance_examples():
    c = np.tile([[1.5, -0.4]], (3, 1))
    pb = ProblemInstance(ProblemKind.SADDLE, c[:, :1], c[:, 1:], r=2.0)
    x = solve_l1_instance(pb)
    np.testing.assert_allclose(x, [solve_1d_exact([1.5] * 3, 2.0), solve_1d_exact([-0.4] * 3, 2.0)])
    np.testing.assert_allclose(x, [0.5, -0.4])

    big = make_l1_saddle(4, 2, 2, 4 * 2 * 1e6, seed=0)
    assert np.abs(solve_l1_instance(big)).max() <= 1e-5

    sym = ProblemInstance(ProblemKind.CONVEX, [[1.0, -2.0], [-1.0, 2.0]], np.zeros((2, 0)), r=0.5)
    np.testing.assert_array_equal(solve_l1_instance(sym), [0.0, 0.0])


def test_oracle_beats_perturbations():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n, d1, d2 = int(rng.integers(1, 6)), int(rng.integers(1, 4)), int(rng.integers(0, 4))
        r = float(rng.choice([1e-3, 0.1, 1.0]))
        pb = make_l1_convex(n, d1, r, int(rng.integers(1e9))) if d2 == 0 else make_l1_saddle(n, d1, d2, r, int(rng.integers(1e9)))
        x = solve_l1_instance(pb)
        assert abs(gap(pb, x, x)) <= 1e-10
        pert = x + rng.normal(scale=rng.choice([1e-3, 0.1, 1.0]), size=(1000, pb.dim))
        assert min(gap(pb, p, x) for p in pert) >= -1e-10


def test_certificate_single_node():
    pb = ProblemInstance(ProblemKind.CONVEX, [[2.0]], np.zeros((1, 0)), r=1.0)
    cert = build_certificate(pb, solve_l1_instance(pb))
    assert cert.delta_star[0, 0] == -1.0
    assert cert.residual == 0.0


def test_certificate_two_symmetric_nodes():
    pb = ProblemInstance(ProblemKind.CONVEX, [[1.0], [-1.0]], np.zeros((2, 0)), r=1.0)
    cert = build_certificate(pb, [0.0])
    np.testing.assert_array_equal(cert.delta_star[:, 0], [-1.0, 1.0])
    assert cert.residual == 0.0


def test_certificate_at_kink():
    pb = ProblemInstance(ProblemKind.CONVEX, [[0.5], [0.5], [3.0]], np.zeros((3, 0)), r=0.1)
    x = solve_l1_instance(pb)
    assert x[0] == 0.5
    cert = build_certificate(pb, x)
    assert cert.residual <= 1e-12
    assert np.abs(cert.delta_star).max() <= 1.0


def test_certificate_rejects_non_optimal_point():
    pb = ProblemInstance(ProblemKind.CONVEX, [[2.0]], np.zeros((1, 0)), r=1.0)
    with pytest.raises(CertificateError):
        build_certificate(pb, [0.3])


def _random_instances(count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n, d1, d2 = int(rng.integers(1, 6)), int(rng.integers(1, 4)), int(rng.integers(1, 4))
        yield make_l1_saddle(n, d1, d2, float(rng.choice([1e-3, 0.1, 1.0])), int(rng.integers(1e9)))


def test_certificates_on_random_instances():
    for pb in _random_instances(20, 1):
        cert = build_certificate(pb, solve_l1_instance(pb))
        assert cert.residual <= 1e-9
        assert np.abs(cert.z_star.sum(axis=0)).max() <= 1e-12 * max(1, pb.n_nodes)
        assert inclusion_residual(cert, pb, cert.r_x, cert.r_yz) <= 1e-8
        for val, bound in certificate_norm_bounds(cert, pb).values():
            assert val <= bound


def test_inclusion_residual_detects_perturbation():
    pb = make_l1_saddle(3, 2, 2, 0.1, seed=4)
    cert = build_certificate(pb, solve_l1_instance(pb))
    cert.y_star[1, 2] += 0.1
    assert inclusion_residual(cert, pb, cert.r_x, cert.r_yz) >= 0.05


def test_inclusion_residual_parameter_constraint():
    pb = make_l1_saddle(3, 1, 1, 0.3, seed=0)
    cert = build_certificate(pb, solve_l1_instance(pb))
    with pytest.raises(ValueError):
        inclusion_residual(cert, pb, cert.r_x, 2 * cert.r_yz)


def test_end_to_end_convergence_to_oracle(small_problem, small_graph):
    from nsdecopt.solver import run

    pb, x_star = small_problem
    d10 = np.linalg.norm(run(pb, small_graph, K=10, T=50).x_o - x_star)
    d400 = np.linalg.norm(run(pb, small_graph, K=400, T=50).x_o - x_star)
    assert d400 <= 0.05 * d10
