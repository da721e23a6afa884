"""Experiment configuration, orchestration and file output."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .dynamics import (
    RNG_NAME,
    EquilibriumSet,
    Trajectory,
    avg_projection,
    collect_equilibria,
    integrate,
    make_rng,
    run_to_equilibrium,
    sample_interior_state,
)
from .errors import BivirusError, ConfigError
from .graph import Graph, load_edge_list_file
from .regimes import RegimeReport, classify
from .state import BiVirusState, VirusParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Tolerances:
    eig_tol: float = 1e-10
    fp_tol: float = 1e-12
    eq_tol: float = 1e-8


@dataclass(frozen=True)
class ExperimentConfig:
    graph_a_path: str
    graph_b_path: str
    beta1: float
    delta1: float
    beta2: float
    delta2: float
    t_end: float = 100.0
    dt0: float = 0.01
    sample_every: float = 1.0
    seeds: int = 1
    rng_seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        for name in ("beta1", "delta1", "beta2", "delta2", "t_end", "dt0", "sample_every"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                raise ConfigError(f"{name} must be a positive number, got {value!r}")
        if isinstance(self.seeds, bool) or not isinstance(self.seeds, int) or self.seeds < 1:
            raise ConfigError(f"seeds must be an integer >= 1, got {self.seeds!r}")
        if isinstance(self.rng_seed, bool) or not isinstance(self.rng_seed, int):
            raise ConfigError("rng_seed must be an integer")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed must fit in an unsigned 64-bit integer")
        for name in ("graph_a_path", "graph_b_path"):
            if not isinstance(getattr(self, name), str):
                raise ConfigError(f"{name} must be a string")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        tol = data.pop("tolerances", {})
        if not isinstance(tol, dict):
            raise ConfigError("tolerances must be a mapping")
        tol_known = {f.name for f in fields(Tolerances)}
        if set(tol) - tol_known:
            raise ConfigError(f"unknown tolerance keys: {sorted(set(tol) - tol_known)}")
        for k, v in tol.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"tolerance {k} must be positive")
        try:
            return cls(**data, tolerances=Tolerances(**tol))
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    @property
    def params(self) -> tuple[VirusParams, VirusParams]:
        return VirusParams(self.beta1, self.delta1), VirusParams(self.beta2, self.delta2)


@dataclass
class ExperimentOutput:
    config: ExperimentConfig
    report: RegimeReport
    initial_states: list[BiVirusState]
    trajectories: list[Trajectory]
    equilibria: EquilibriumSet


def run_experiment(cfg: ExperimentConfig, a: Graph | None = None, b: Graph | None = None) -> ExperimentOutput:
    """Classify the configuration and simulate it from ``cfg.seeds`` random starts.

    Graphs are read from the configured paths unless passed explicitly. Each
    seed's trajectory is sampled every ``sample_every`` up to ``t_end``; its end
    point is then driven to an equilibrium and refined.
    """
    if a is None:
        a = load_edge_list_file(cfg.graph_a_path)
    if b is None:
        b = load_edge_list_file(cfg.graph_b_path)
    if a.n != b.n:
        raise ConfigError(f"graphs have different node counts ({a.n} vs {b.n})")
    p1, p2 = cfg.params
    tol = cfg.tolerances
    report = classify(p1, p2, a, b, eig_tol=tol.eig_tol, fp_tol=tol.fp_tol)
    rng = make_rng(cfg.rng_seed)
    starts = [sample_interior_state(rng, a.n) for _ in range(cfg.seeds)]
    trajectories, terminals = [], []
    for k, s0 in enumerate(starts):
        try:
            traj = integrate(s0, p1, p2, a, b, cfg.t_end, cfg.dt0, cfg.sample_every)
        except BivirusError as exc:
            raise type(exc)(f"seed {k}: {exc}") from exc
        trajectories.append(traj)
        try:
            tail = traj
            if traj.terminal_residual >= tol.eq_tol:
                tail = run_to_equilibrium(traj.final, p1, p2, a, b, tol.eq_tol, dt0=cfg.dt0)
            terminals.append((k, tail))
        except BivirusError as exc:
            log.warning("seed %d did not settle: %s", k, exc)
            terminals.append((k, exc))
    points, errors = collect_equilibria(terminals, p1, p2, a, b)
    eqs = EquilibriumSet(points, rng=RNG_NAME, rng_seed=cfg.rng_seed, errors=errors)
    return ExperimentOutput(cfg, report, starts, trajectories, eqs)


def fmt(v: float) -> str:
    return f"{v:.17g}"


def trajectory_csv(traj: Trajectory) -> str:
    lines = ["t,avgX,avgY"]
    for t, x, y in zip(traj.times, traj.xs, traj.ys):
        ax, ay = avg_projection(BiVirusState(x, y))
        lines.append(f"{fmt(t)},{fmt(ax)},{fmt(ay)}")
    return "\n".join(lines) + "\n"


def full_state_csv(traj: Trajectory) -> str:
    n = traj.xs.shape[1]
    header = ["t"] + [f"x_{i}" for i in range(n)] + [f"y_{i}" for i in range(n)]
    lines = [",".join(header)]
    for t, x, y in zip(traj.times, traj.xs, traj.ys):
        lines.append(",".join(fmt(v) for v in [t, *x, *y]))
    return "\n".join(lines) + "\n"


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def emit_outputs(out: ExperimentOutput, directory) -> list[Path]:
    """Write ``regime.json``, ``trajectory_<seed>.csv``, ``equilibria.json`` and ``manifest.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = []

    def write(name: str, text: str):
        path = d / name
        path.write_text(text, encoding="utf-8")
        written.append(path)

    write("regime.json", _dump_json(out.report.to_dict()))
    for k, traj in enumerate(out.trajectories):
        write(f"trajectory_{k}.csv", trajectory_csv(traj))
    write("equilibria.json", _dump_json(out.equilibria.to_dict()))
    manifest = {
        "tool": "bivirus",
        "version": __version__,
        "rng": RNG_NAME,
        "rng_seed": out.config.rng_seed,
        "config": out.config.to_dict(),
    }
    write("manifest.json", _dump_json(manifest))
    return written
