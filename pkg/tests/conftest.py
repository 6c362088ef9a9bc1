from pathlib import Path

import pytest

from nsdecopt.config import AlgorithmSpec, ExperimentConfig, GraphSpec, ProblemSpec
from nsdecopt.netgraph import TimeVaryingGraph, generate_erdos_renyi, read_edge_list
from nsdecopt.problems import make_l1_saddle
from nsdecopt.verify import solve_l1_instance

DATA = Path(__file__).parent / "data"

# frozen from generate_erdos_renyi(15, 0.3, 42) / certify_chi on it
ER15_EDGE_COUNT = 30
ER15_CHI = 5.319094361953478

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def er15():
    return generate_erdos_renyi(15, 0.3, 42)


@pytest.fixture(scope="session")
def er15_golden():
    edges, n, _ = read_edge_list(DATA / "er15_p03_s42.edges")
    return TimeVaryingGraph(n_nodes=n, base_edges=edges, seed=42)


@pytest.fixture(scope="session")
def small_graph():
    return generate_erdos_renyi(5, 0.5, 3)


@pytest.fixture(scope="session")
def small_problem():
    pb = make_l1_saddle(5, 2, 2, 1.0, seed=7)
    return pb, solve_l1_instance(pb)


def small_config(**algo) -> ExperimentConfig:
    """The standard small fixture: 5-node ER graph, 2+2 dims, r = 1."""
    return ExperimentConfig(
        problem=ProblemSpec(n=5, d_xi=2, d_zeta=2, r=1.0, center_seed=7),
        graph=GraphSpec(p=0.5, seed=3),
        algorithm=AlgorithmSpec(**{"K": 40, "T": 50, "sigma": 0.0, **algo}),
    )


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
