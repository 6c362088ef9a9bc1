"""Non-smooth stochastic decentralized optimization over time-varying networks."""

from .gossip import GossipOperator, apply_gossip, build_gossip, certify_chi, project_consensus_complement
from .netgraph import TimeVaryingGraph, edges_at, generate_erdos_renyi, is_connected
from .problems import OperatorOracle, ProblemInstance, gap_cvx, gap_spp, make_l1_convex, make_l1_saddle
from .solver import RunResult, Schedule, build_schedule, outer_step, run
from .verify import build_certificate, inclusion_residual, solve_1d_exact, solve_l1_instance

__version__ = "0.1.0"
