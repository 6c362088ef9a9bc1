import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import ER15_CHI
from nsdecopt.gossip import (
    GossipOperator,
    apply_gossip,
    build_gossip,
    certify_chi,
    chi_of_edges,
    laplacian,
    project_consensus_complement,
)
from nsdecopt.netgraph import DisconnectedGraphError, complete_graph, generate_erdos_renyi, path_graph
from nsdecopt.verify import contraction_probe


def test_complete_graph_is_projection():
    for n in (2, 3, 7):
        W = build_gossip(complete_graph(n).base_edges, n)
        np.testing.assert_allclose(W, np.eye(n) - np.ones((n, n)) / n, atol=1e-14)


def test_single_edge():
    np.testing.assert_allclose(build_gossip({(0, 1)}, 2), [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)


def test_path3():
    L = np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]], dtype=float)
    np.testing.assert_allclose(laplacian(path_graph(3).base_edges, 3), L)
    np.testing.assert_allclose(build_gossip(path_graph(3).base_edges, 3), L / 3, atol=1e-14)


def test_disconnected_rejected():
    with pytest.raises(DisconnectedGraphError):
        build_gossip({(0, 1)}, 3)


@pytest.mark.parametrize("n", [2, 3, 15])
def test_chi_complete_is_one(n):
    assert certify_chi(complete_graph(n), rounds=5) == pytest.approx(1.0, abs=1e-9)


def test_chi_single_edge():
    assert chi_of_edges({(0, 1)}, 2) == pytest.approx(1.0, abs=1e-12)


def test_chi_er15_golden(er15):
    assert certify_chi(er15, 1) == pytest.approx(ER15_CHI, rel=1e-12)
    L = laplacian(er15.base_edges, 15)
    ev = np.linalg.eigvalsh(L)
    # independent closed form: worst zero-sum eigenvalue is the smallest positive one
    assert certify_chi(er15, 1) == pytest.approx(1 / (1 - (1 - ev[1] / ev[-1]) ** 2), rel=1e-12)


def test_apply_gossip_examples():
    W = build_gossip({(0, 1)}, 2)
    a, b = np.array([1.0, 2.0]), np.array([-3.0, 0.5])
    out = apply_gossip(W, np.stack([a, b]))
    np.testing.assert_allclose(out, np.stack([(a - b) / 2, (b - a) / 2]))
    P = build_gossip(complete_graph(4).base_edges, 4)
    np.testing.assert_allclose(apply_gossip(P, np.tile([1.0, -2.0, 3.0], (4, 1))), 0, atol=1e-14)
    assert not apply_gossip(P, np.zeros((4, 3))).any()
    with pytest.raises(ValueError):
        apply_gossip(P, np.zeros((3, 3)))


def test_projection_examples():
    np.testing.assert_array_equal(project_consensus_complement(np.ones((3, 2))), 0)
    np.testing.assert_array_equal(project_consensus_complement([[1.0], [-1.0]]), [[1.0], [-1.0]])
    np.testing.assert_array_equal(project_consensus_complement([[3.0], [1.0]]), [[1.0], [-1.0]])


def test_contraction_on_churn_schedule(er15):
    g = er15.with_churn(0.2, seed=5)
    chi = certify_chi(g, rounds=30)
    rng = np.random.default_rng(0)
    for k in range(30):
        W = build_gossip(g.edges_at(k), 15)
        assert np.abs(W @ np.ones(15)).max() <= 1e-12
        assert np.abs(np.ones(15) @ W).max() <= 1e-12
        adjacent = np.zeros((15, 15), dtype=bool)
        for u, v in g.edges_at(k):
            adjacent[u, v] = adjacent[v, u] = True
        np.fill_diagonal(adjacent, True)
        assert np.all(W[~adjacent] == 0.0)
        for _ in range(100):
            x = project_consensus_complement(rng.standard_normal((15, 3)))
            lhs = np.sum((apply_gossip(W, x) - x) ** 2)
            assert lhs <= (1 - 1 / chi) * np.sum(x**2) + 1e-12


def test_contraction_probe_small_cases(er15):
    P = build_gossip(complete_graph(6).base_edges, 6)
    assert contraction_probe(P, 1.0, 50, seed=0) <= 1e-28
    assert contraction_probe(build_gossip({(0, 1)}, 2), 1.0, 50, seed=0) <= 1e-28
    chi = certify_chi(er15, 1)
    assert contraction_probe(build_gossip(er15.base_edges, 15), chi, 500, seed=1) <= 1 - 1 / chi + 1e-12


def test_operator_chi_is_max_over_rounds(er15):
    g = er15.with_churn(0.3, seed=11)
    op = GossipOperator(g, rounds=12)
    assert op.chi == pytest.approx(max(chi_of_edges(g.edges_at(k), 15) for k in range(12)))
    np.testing.assert_array_equal(op.matrix(3), build_gossip(g.edges_at(3), 15))


stacked = arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 4)),
                 elements=st.floats(-1e6, 1e6, allow_nan=False))


@given(stacked)
def test_projection_idempotent(x):
    once = project_consensus_complement(x)
    np.testing.assert_allclose(project_consensus_complement(once), once, atol=1e-14 * (1 + np.abs(x).max()))


@settings(max_examples=50, deadline=None)
@given(n=st.integers(3, 15), seed=st.integers(0, 2**32 - 1))
def test_complete_graph_gossip_equals_projection(n, seed):
    W = build_gossip(complete_graph(n).base_edges, n)
    x = np.random.default_rng(seed).standard_normal((n, 3))
    np.testing.assert_allclose(apply_gossip(W, x), project_consensus_complement(x), atol=1e-12)
