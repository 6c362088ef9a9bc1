"""Experiment configuration: nested dataclasses with a lossless JSON form."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    family: str = "l1_saddle"  # or "l1_convex"
    n: int = 15
    d_xi: int = 4
    d_zeta: int = 4
    r: float = 1e-3
    r_xi: float | None = None
    r_zeta: float | None = None
    regularize_eps: float | None = None
    center_seed: int = 0
    spread: float = 1.0


@dataclass(frozen=True)
class GraphSpec:
    kind: str = "er"  # or "complete"
    p: float = 0.3
    schedule: str = "static"  # or "churn"
    churn_rate: float = 0.2
    seed: int = 42


@dataclass(frozen=True)
class AlgorithmSpec:
    K: int = 30
    T: int = 10
    sigma: float = 0.1
    oracle_seed: int = 1
    eta_x_variant: str = "per_k"
    metric_mode: str = "anytime"


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    graph: GraphSpec = field(default_factory=GraphSpec)
    algorithm: AlgorithmSpec = field(default_factory=AlgorithmSpec)
    output: str = "metrics.csv"

    def validate(self) -> "ExperimentConfig":
        pr, gr, al = self.problem, self.graph, self.algorithm
        if pr.family not in ("l1_saddle", "l1_convex"):
            raise ConfigError(f"unknown problem family {pr.family!r}")
        if pr.n < 2 or pr.d_xi < 1 or pr.d_zeta < 0:
            raise ConfigError("need n >= 2, d_xi >= 1, d_zeta >= 0")
        if pr.family == "l1_convex" and pr.d_zeta != 0:
            raise ConfigError("l1_convex requires d_zeta = 0")
        if pr.family == "l1_saddle" and pr.d_zeta < 1:
            raise ConfigError("l1_saddle requires d_zeta >= 1")
        if (pr.r_xi is None) != (pr.r_zeta is None):
            raise ConfigError("set both r_xi and r_zeta or neither")
        if pr.r_xi is not None and (pr.r_xi <= 0 or pr.r_zeta <= 0 or pr.family != "l1_saddle"):
            raise ConfigError("asymmetric regularization needs a saddle problem and positive r_xi, r_zeta")
        if pr.r < 0:
            raise ConfigError("r must be non-negative")
        if pr.r_xi is None and pr.r == 0 and not (pr.regularize_eps and pr.regularize_eps > 0):
            raise ConfigError("r = 0 needs regularize_eps > 0")
        if gr.kind not in ("er", "complete"):
            raise ConfigError(f"unknown graph kind {gr.kind!r}")
        if gr.schedule not in ("static", "churn"):
            raise ConfigError(f"unknown schedule {gr.schedule!r}")
        if not 0 < gr.p <= 1 or not 0 <= gr.churn_rate <= 1:
            raise ConfigError("p must lie in (0, 1] and churn_rate in [0, 1]")
        if al.K < 1 or al.T < 1:
            raise ConfigError("K and T must be >= 1")
        if al.sigma < 0:
            raise ConfigError("sigma must be non-negative")
        if al.eta_x_variant not in ("per_k", "literal"):
            raise ConfigError("eta_x_variant must be per_k or literal")
        if al.metric_mode not in ("anytime", "final"):
            raise ConfigError("metric_mode must be anytime or final")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            return cls(
                problem=_build(ProblemSpec, d.get("problem", {})),
                graph=_build(GraphSpec, d.get("graph", {})),
                algorithm=_build(AlgorithmSpec, d.get("algorithm", {})),
                output=d.get("output", "metrics.csv"),
            )
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON config: {e}") from None

    def with_override(self, key: str, raw: str) -> "ExperimentConfig":
        """Apply ``section.field=value`` (value parsed as JSON, else kept as text)."""
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        if key == "output":
            return replace(self, output=str(value))
        section, _, name = key.partition(".")
        sub = getattr(self, section, None)
        if not is_dataclass(sub) or name not in {f.name for f in fields(sub)}:
            raise ConfigError(f"unknown config key {key!r}")
        return replace(self, **{section: replace(sub, **{name: value})})


def _build(cls, d: dict):
    unknown = set(d) - {f.name for f in fields(cls)}
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**d)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(str(e)) from None
    return ExperimentConfig.from_json(text)
