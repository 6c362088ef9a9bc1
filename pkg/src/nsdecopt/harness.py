"""Command-line experiment harness: ``run``, ``sweep`` and ``verify``.

Exit codes: 0 ok, 2 config error, 3 infeasible graph, 4 numerical abort,
5 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import gossip as gsp
from .config import ConfigError, ExperimentConfig, load_config
from .netgraph import DisconnectedGraphError, TimeVaryingGraph, complete_graph, generate_erdos_renyi
from .problems import (
    AsymmetricRegularization,
    CoordinateMap,
    ProblemInstance,
    gap as problem_gap,
    gap_spp_asymmetric,
    make_l1_convex,
    make_l1_saddle,
    regularize_monotone,
    rescale_asymmetric,
)
from .solver import METRIC_COLUMNS, NumericalAbort, RunResult, run
from .verify import (
    build_certificate,
    certificate_norm_bounds,
    contraction_probe,
    inclusion_residual,
    solve_l1_instance,
)

EXIT_OK, EXIT_CONFIG, EXIT_GRAPH, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4, 5
SWEEP_AXES = ("K", "T", "sigma", "churn_rate")


@dataclass
class Pipeline:
    """Everything derived from a config before the solver runs."""

    config: ExperimentConfig
    graph: TimeVaryingGraph
    gossip: gsp.GossipOperator
    original: ProblemInstance
    solved: ProblemInstance
    x_star: np.ndarray
    coords: CoordinateMap | None = None
    asym: AsymmetricRegularization | None = None

    def evaluate(self, x_o_solved):
        """Distance and gap of a solver output, in the original problem's terms."""
        x_o = self.coords.back(x_o_solved) if self.coords else x_o_solved
        dist = float(np.linalg.norm(x_o - self.x_star))
        if self.asym is not None:
            return dist, gap_spp_asymmetric(self.original, self.asym, x_o, self.x_star)
        return dist, float(problem_gap(self.original, x_o, self.x_star))


def build_graph(cfg: ExperimentConfig) -> TimeVaryingGraph:
    gs = cfg.graph
    g = complete_graph(cfg.problem.n) if gs.kind == "complete" else generate_erdos_renyi(cfg.problem.n, gs.p, gs.seed)
    if gs.schedule == "churn":
        g = g.with_churn(gs.churn_rate, gs.seed)
    return g


def build_problem(cfg: ExperimentConfig) -> ProblemInstance:
    pr = cfg.problem
    r = 0.0 if pr.r_xi is not None else pr.r
    if pr.family == "l1_convex":
        return make_l1_convex(pr.n, pr.d_xi, r, pr.center_seed, pr.spread)
    return make_l1_saddle(pr.n, pr.d_xi, pr.d_zeta, r, pr.center_seed, pr.spread)


def prepare(cfg: ExperimentConfig) -> Pipeline:
    cfg.validate()
    graph = build_graph(cfg)
    gossip = gsp.GossipOperator(graph, rounds=cfg.algorithm.K)
    original = build_problem(cfg)
    pr = cfg.problem
    if pr.r_xi is not None:
        asym = AsymmetricRegularization(pr.r_xi, pr.r_zeta)
        solved, coords = rescale_asymmetric(original, asym)
        x_star = coords.back(solve_l1_instance(solved))
        return Pipeline(cfg, graph, gossip, original, solved, x_star, coords, asym)
    solved = regularize_monotone(original, pr.regularize_eps) if original.r == 0 else original
    return Pipeline(cfg, graph, gossip, original, solved, solve_l1_instance(original))


def execute(cfg: ExperimentConfig, timing: bool = False) -> tuple[Pipeline, RunResult]:
    pipe = prepare(cfg)
    al = cfg.algorithm
    result = run(
        pipe.solved,
        pipe.graph,
        al.K,
        al.T,
        seed=al.oracle_seed,
        sigma=al.sigma,
        eta_x_variant=al.eta_x_variant,
        metric_mode=al.metric_mode,
        gossip=pipe.gossip,
        timing=timing,
        evaluate=pipe.evaluate,
    )
    return pipe, result


# ------------------------------------------------------------------ output


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def metadata_row(pipe: Pipeline, result: RunResult) -> dict:
    cfg = pipe.config
    return {
        "K": cfg.algorithm.K,
        "T": cfg.algorithm.T,
        "r": pipe.solved.r,
        "chi": pipe.gossip.chi,
        "sigma": cfg.algorithm.sigma,
        "seed": cfg.algorithm.oracle_seed,
        "eta_x_variant": cfg.algorithm.eta_x_variant,
        "metric_mode": result.metric_mode,
        "n": pipe.graph.n_nodes,
        "n_edges": len(pipe.graph.base_edges),
        "graph_schedule": pipe.graph.schedule_kind.value,
        "graph_rejections": pipe.graph.rejections,
        "max_implicit_residual": result.max_implicit_residual,
    }


def metadata_path(out: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + ".meta.csv")


# ------------------------------------------------------------------ commands


def cmd_run(cfg: ExperimentConfig, timing: bool = False) -> int:
    pipe, result = execute(cfg, timing)
    out = Path(cfg.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(rows_to_csv(METRIC_COLUMNS, result.rows))
    meta = metadata_row(pipe, result)
    metadata_path(cfg.output).write_text(rows_to_csv(list(meta), [meta]))
    last = result.rows[-1]
    print(f"K={cfg.algorithm.K} chi={pipe.gossip.chi:.6g} dist={last['dist_to_opt']:.6g} gap={last['gap']:.6g}")
    return EXIT_OK


def cell_seed(base: int, axis: str, value, repeat: int) -> int:
    digest = hashlib.sha256(f"{base}|{axis}|{value!r}|{repeat}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def cell_config(cfg: ExperimentConfig, axis: str, value, repeat: int) -> ExperimentConfig:
    seed = cell_seed(cfg.algorithm.oracle_seed, axis, value, repeat)
    al, gr = cfg.algorithm, cfg.graph
    if axis == "K":
        al = replace(al, K=int(value))
    elif axis == "T":
        al = replace(al, T=int(value))
    elif axis == "sigma":
        al = replace(al, sigma=float(value))
    elif axis == "churn_rate":
        gr = replace(gr, churn_rate=float(value), schedule="churn" if float(value) > 0 else gr.schedule)
    else:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
    if gr.schedule == "churn":
        gr = replace(gr, seed=cell_seed(gr.seed, axis, value, repeat) % 2**32)
    # metrics only need the final row
    al = replace(al, oracle_seed=seed, metric_mode="anytime")
    return replace(cfg, algorithm=al, graph=gr)


def _run_cell(args) -> tuple:
    cfg, axis, value, repeat = args
    try:
        _, result = execute(cfg)
        last = result.rows[-1]
        return (axis, value, repeat, last["dist_to_opt"], last["gap"], "")
    except (DisconnectedGraphError, NumericalAbort, ValueError) as e:
        return (axis, value, repeat, math.nan, math.nan, type(e).__name__)


SWEEP_COLUMNS = ("axis", "value", "repeats", "ok", "mean_dist", "stderr_dist", "mean_gap", "stderr_gap", "failed")


def _mean_stderr(xs) -> tuple[float, float]:
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        return math.nan, math.nan
    if xs.size == 1:
        return float(xs[0]), 0.0
    return float(xs.mean()), float(xs.std(ddof=1) / math.sqrt(xs.size))


def sweep(cfg: ExperimentConfig, axis: str, values, repeats: int, workers: int = 1) -> list[dict]:
    """Run every ``(value, repeat)`` cell; return one summary row per value."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
    if not values or repeats < 1:
        raise ConfigError("sweep needs values and repeats >= 1")
    cfg.validate()
    jobs = [(cell_config(cfg, axis, v, rep), axis, v, rep) for v in values for rep in range(repeats)]
    for job in jobs:
        job[0].validate()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    results.sort(key=lambda c: (values.index(c[1]), c[2]))

    summary = []
    for v in values:
        cells = [c for c in results if c[1] == v]
        good = [c for c in cells if not c[5]]
        md, sd = _mean_stderr([c[3] for c in good])
        mg, sg = _mean_stderr([c[4] for c in good])
        summary.append(
            {
                "axis": axis,
                "value": v,
                "repeats": repeats,
                "ok": len(good),
                "mean_dist": md,
                "stderr_dist": sd,
                "mean_gap": mg,
                "stderr_gap": sg,
                "failed": ";".join(f"{c[2]}:{c[5]}" for c in cells if c[5]),
            }
        )
    return summary


def cmd_sweep(cfg: ExperimentConfig, axis: str, values, repeats: int, workers: int = 1) -> int:
    summary = sweep(cfg, axis, values, repeats, workers)
    out = Path(cfg.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(rows_to_csv(SWEEP_COLUMNS, summary))
    for row in summary:
        print(f"{axis}={row['value']}: gap {row['mean_gap']:.6g} +- {row['stderr_gap']:.3g} ({row['ok']}/{repeats} ok)")
    return EXIT_OK


def verification_checks(cfg: ExperimentConfig, trials: int = 200, perturbations: int = 1000) -> list[dict]:
    """Run graph, oracle and certificate checks for the configured instance."""
    pipe = prepare(cfg)
    checks = []

    def add(name, value, threshold, ok):
        checks.append({"check": name, "value": float(value), "threshold": float(threshold), "pass": bool(ok)})

    chi = pipe.gossip.chi
    add("chi", chi, 1.0, chi >= 1.0)
    n = pipe.graph.n_nodes
    rounds = 1 if pipe.graph.schedule_kind.value == "static" else cfg.algorithm.K
    worst_ratio = worst_sum = 0.0
    for k in range(rounds):
        W = pipe.gossip.matrix(k)
        worst_ratio = max(worst_ratio, contraction_probe(W, chi, trials, seed=k))
        worst_sum = max(worst_sum, np.abs(W @ np.ones(n)).max(), np.abs(np.ones(n) @ W).max())
    add("contraction_ratio", worst_ratio, 1 - 1 / chi + 1e-12, worst_ratio <= 1 - 1 / chi + 1e-12)
    add("gossip_row_col_sums", worst_sum, 1e-12, worst_sum <= 1e-12)

    # oracle solution must not be beaten by random perturbations
    rng = np.random.default_rng(cfg.problem.center_seed)
    pb, x_star = pipe.original, pipe.x_star
    if pipe.asym is not None:
        gap_of = lambda x: gap_spp_asymmetric(pb, pipe.asym, x, x_star)  # noqa: E731
    else:
        gap_of = lambda x: problem_gap(pb, x, x_star)  # noqa: E731
    scale = 0.1 * max(1.0, float(np.abs(pb.centers).max()))
    worst_gap = min(gap_of(x_star + scale * rng.standard_normal(pb.dim)) for _ in range(perturbations))
    add("oracle_min_perturbed_gap", worst_gap, -1e-10, worst_gap >= -1e-10)

    cert_pb = pipe.solved
    cert_x = solve_l1_instance(cert_pb)
    cert = build_certificate(cert_pb, cert_x)
    add("certificate_stationarity", cert.residual, 1e-9, cert.residual <= 1e-9)
    res = inclusion_residual(cert, cert_pb, cert.r_x, cert.r_yz)
    add("inclusion_residual", res, 1e-8, res <= 1e-8)
    for name, (val, bound) in certificate_norm_bounds(cert, cert_pb).items():
        add(f"norm_bound_{name}", val, bound, val <= bound * (1 + 1e-12))
    return checks


def cmd_verify(cfg: ExperimentConfig, out: str | None = None) -> int:
    checks = verification_checks(cfg)
    text = rows_to_csv(("check", "value", "threshold", "pass"), checks)
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK if all(c["pass"] for c in checks) else EXIT_VERIFY


# ---------------------------------------------------------------------- CLI


def _parse_values(text: str) -> list:
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        vals.append(int(tok) if tok.lstrip("-").isdigit() else float(tok))
    return vals


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsdecopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (defaults apply when omitted)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field, e.g. algorithm.K=50")
        p.add_argument("--K", type=int)
        p.add_argument("--T", type=int)
        p.add_argument("--sigma", type=float)
        p.add_argument("--out", help="output CSV path")

    p_run = sub.add_parser("run", help="single experiment, writes metrics + metadata CSV")
    common(p_run)
    p_run.add_argument("--timing", action="store_true", help="fill wall_ns (breaks byte-identical output)")

    p_sweep = sub.add_parser("sweep", help="sweep one axis with repeats, writes a summary CSV")
    common(p_sweep)
    p_sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--repeats", type=int, default=10)
    p_sweep.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    p_verify = sub.add_parser("verify", help="oracle and certificate checks, prints a pass/fail table")
    common(p_verify)

    p_dump = sub.add_parser("config", help="print the effective config as JSON")
    common(p_dump)
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        cfg = cfg.with_override(key.strip(), raw.strip())
    for flag in ("K", "T", "sigma"):
        v = getattr(args, flag)
        if v is not None:
            cfg = replace(cfg, algorithm=replace(cfg.algorithm, **{flag: v}))
    if args.out:
        cfg = replace(cfg, output=args.out)
    return cfg.validate()


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "run":
            return cmd_run(cfg, args.timing)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.axis, _parse_values(args.values), args.repeats, args.workers)
        if args.command == "verify":
            return cmd_verify(cfg, args.out)
        sys.stdout.write(cfg.to_json())
        return EXIT_OK
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DisconnectedGraphError as e:
        print(f"infeasible graph: {e}", file=sys.stderr)
        return EXIT_GRAPH
    except NumericalAbort as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
