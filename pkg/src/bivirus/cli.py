"""Command-line interface: ``bivirus <subcommand> [options]``.

Data goes to standard output (or files under ``--out``); diagnostics go to
standard error at the level given by ``BIVIRUS_LOG``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    integrate,
    make_rng,
    multi_start_equilibria,
    sample_interior_state,
)
from .errors import BivirusError, ConfigError
from .experiment import (
    ExperimentConfig,
    emit_outputs,
    fmt,
    full_state_csv,
    run_experiment,
    trajectory_csv,
)
from .graph import degree_stats, load_edge_list_file
from .order import monotonicity_trial, random_ordered_pair
from .regimes import classify, parse_grid, sweep
from .sis import sis_fixed_point
from .spectral import DEFAULT_TOL, pf_eigenpair, scaled_spectral
from .state import BiVirusState, VirusParams

log = logging.getLogger("bivirus")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    level = os.environ.get("BIVIRUS_LOG", "warn").lower()
    if level not in LOG_LEVELS:
        level = "warn"
    logging.basicConfig(stream=sys.stderr, level=LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s")


# --------------------------------------------------------------------------
# argument helpers


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON experiment config supplying defaults")
    p.add_argument("--out", help="output directory (default: standard output)")
    p.add_argument("--rng-seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)


def _pair_args(p: argparse.ArgumentParser):
    p.add_argument("--graph-a")
    p.add_argument("--graph-b")
    for name in ("beta1", "delta1", "beta2", "delta2"):
        p.add_argument(f"--{name}", type=float)


def _config_dict(args) -> dict:
    if not args.config:
        return {}
    try:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    ExperimentConfig.from_dict(data)  # strict validation
    return data


def _pick(args, cfg: dict, name: str, cfg_name: str | None = None, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    value = cfg.get(cfg_name or name)
    if value is not None:
        return value
    if default is not None:
        return default
    raise ConfigError(f"missing required value --{name.replace('_', '-')}")


def _load_pair(args, cfg):
    a = load_edge_list_file(_pick(args, cfg, "graph_a", "graph_a_path"))
    b = load_edge_list_file(_pick(args, cfg, "graph_b", "graph_b_path"))
    if a.n != b.n:
        raise ConfigError(f"graphs have different node counts ({a.n} vs {b.n})")
    p1 = VirusParams(_pick(args, cfg, "beta1"), _pick(args, cfg, "delta1"))
    p2 = VirusParams(_pick(args, cfg, "beta2"), _pick(args, cfg, "delta2"))
    return a, b, p1, p2


def _eig_tol(args, cfg) -> float:
    if args.tol is not None:
        return args.tol
    return cfg.get("tolerances", {}).get("eig_tol", DEFAULT_TOL)


def _emit(args, name: str, text: str):
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / name).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read_vector(path: str) -> np.ndarray:
    values = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            values.append(float(line.split(",")[-1]))
    return np.array(values)


def _initial_state(args, n: int, rng_seed: int) -> BiVirusState:
    x0, y0 = args.x0, args.y0
    if x0.startswith("uniform:") or y0.startswith("uniform:"):
        if x0 != y0:
            raise ConfigError("uniform sampling must be requested for both --x0 and --y0")
        seed = int(x0.split(":", 1)[1]) if x0 != "uniform:" else rng_seed
        return sample_interior_state(make_rng(seed), n)
    s = BiVirusState(_read_vector(x0), _read_vector(y0))
    if s.n != n:
        raise ConfigError(f"initial state has {s.n} entries, graphs have {n} nodes")
    return s


# --------------------------------------------------------------------------
# subcommands


def cmd_validate(args, cfg):
    g = load_edge_list_file(args.graph)
    ds = degree_stats(g)
    _emit(args, "validate.txt", (
        f"nodes: {g.n}\nedges: {g.edge_count}\n"
        f"d_min: {fmt(ds.d_min)}\nd_max: {fmt(ds.d_max)}\nconnected: yes\n"
    ))


def cmd_spectral(args, cfg):
    g = load_edge_list_file(args.graph)
    tol = _eig_tol(args, cfg)
    ep = pf_eigenpair(g.adjacency, tol)
    lines = [f"lambda: {fmt(ep.value)}", f"residual: {ep.residual:.3e}", "node,pf_vector"]
    labels = g.node_labels or tuple(str(i) for i in range(g.n))
    lines += [f"{labels[i]},{fmt(v)}" for i, v in enumerate(ep.vector)]
    if args.scale:
        s = _read_vector(args.scale)
        lines.insert(1, f"lambda_scaled: {fmt(scaled_spectral(s, g, tol))}")
    _emit(args, "spectral.txt", "\n".join(lines) + "\n")


def cmd_sis(args, cfg):
    g = load_edge_list_file(args.graph)
    p = VirusParams(args.beta, args.delta)
    fp = sis_fixed_point(p, g, args.tol if args.tol is not None else 1e-12)
    lam = pf_eigenpair(g.adjacency).value
    lines = [f"# tau*lambda: {fmt(p.tau * lam)}", f"# verdict: {fp.regime.value}", "node,value"]
    labels = g.node_labels or tuple(str(i) for i in range(g.n))
    lines += [f"{labels[i]},{fmt(v)}" for i, v in enumerate(fp.x_star)]
    _emit(args, "sis.csv", "\n".join(lines) + "\n")


def cmd_simulate(args, cfg):
    a, b, p1, p2 = _load_pair(args, cfg)
    rng_seed = _pick(args, cfg, "rng_seed", default=0)
    s0 = _initial_state(args, a.n, rng_seed)
    t_end = _pick(args, cfg, "t_end", default=100.0)
    every = _pick(args, cfg, "sample_every", default=1.0)
    dt0 = _pick(args, cfg, "dt0", default=0.01)
    traj = integrate(s0, p1, p2, a, b, t_end, dt0, every)
    _emit(args, "trajectory.csv", trajectory_csv(traj))
    if args.full_state:
        Path(args.full_state).write_text(full_state_csv(traj), encoding="utf-8")


def cmd_classify(args, cfg):
    a, b, p1, p2 = _load_pair(args, cfg)
    report = classify(p1, p2, a, b, eig_tol=_eig_tol(args, cfg))
    _emit(args, "regime.json", json.dumps(report.to_dict(), indent=2) + "\n")


def cmd_sweep(args, cfg):
    a = load_edge_list_file(_pick(args, cfg, "graph_a", "graph_a_path"))
    b = load_edge_list_file(_pick(args, cfg, "graph_b", "graph_b_path"))
    cells = sweep(
        a, b, parse_grid(args.tau1), parse_grid(args.tau2), args.verify,
        _pick(args, cfg, "rng_seed", default=0), eig_tol=_eig_tol(args, cfg),
    )
    lines = ["tau1,tau2,region,predicted,verified"]
    failed = 0
    for c in cells:
        if c.error:
            failed += 1
            log.error("cell (%s, %s): %s", c.tau1, c.tau2, c.error)
            lines.append(f"{fmt(c.tau1)},{fmt(c.tau2)},error,error,")
            continue
        verified = "" if c.verified is None else str(c.verified).lower()
        lines.append(
            f"{fmt(c.tau1)},{fmt(c.tau2)},{c.report.region.value},{c.report.predicted.value},{verified}"
        )
    _emit(args, "sweep.csv", "\n".join(lines) + "\n")
    if failed:
        raise BivirusError(f"{failed} sweep cells failed")


def cmd_equilibria(args, cfg):
    a, b, p1, p2 = _load_pair(args, cfg)
    seeds = _pick(args, cfg, "seeds", default=5)
    eqs = multi_start_equilibria(p1, p2, a, b, seeds, _pick(args, cfg, "rng_seed", default=0))
    _emit(args, "equilibria.json", json.dumps(eqs.to_dict(), indent=2) + "\n")


def cmd_monotone(args, cfg):
    a, b, p1, p2 = _load_pair(args, cfg)
    rng = make_rng(_pick(args, cfg, "rng_seed", default=0))
    t_end = args.t_end
    times = list(np.linspace(0, t_end, 11)[1:])
    lines = ["pair,initial,passed,min_margin"]
    failures = 0
    for k in range(args.pairs):
        s1, s2 = random_ordered_pair(rng, a.n)
        res = monotonicity_trial(s1, s2, p1, p2, a, b, times)
        failures += not res.passed
        lines.append(f"{k},{res.initial.value},{'PASS' if res.passed else 'FAIL'},{res.min_margin:.3e}")
    lines.append(f"# {args.pairs - failures}/{args.pairs} passed")
    _emit(args, "monotone.csv", "\n".join(lines) + "\n")
    if failures:
        raise BivirusError(f"{failures} monotonicity trials failed")


def cmd_run(args, cfg):
    if not args.config:
        raise ConfigError("run needs --config")
    data = dict(cfg)
    if args.rng_seed is not None:
        data["rng_seed"] = args.rng_seed
    if args.tol is not None:
        data["tolerances"] = {**data.get("tolerances", {}), "eig_tol": args.tol}
    config = ExperimentConfig.from_dict(data)
    out = run_experiment(config)
    if not args.out:
        raise ConfigError("run needs --out")
    for path in emit_outputs(out, args.out):
        log.info("wrote %s", path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bivirus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bivirus {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an edge list and print its statistics")
    p.add_argument("--graph", required=True)
    _common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("spectral", help="PF eigenpair of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--scale", help="file with one scale value per line")
    _common(p)
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("sis", help="single-virus threshold and fixed point")
    p.add_argument("--graph", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    _common(p)
    p.set_defaults(func=cmd_sis)

    p = sub.add_parser("simulate", help="integrate the bi-virus system")
    _pair_args(p)
    p.add_argument("--x0", default="uniform:")
    p.add_argument("--y0", default="uniform:")
    p.add_argument("--t-end", type=float)
    p.add_argument("--sample-every", type=float)
    p.add_argument("--dt0", type=float)
    p.add_argument("--full-state", help="also write the full state CSV to this path")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classify", help="predict the attractor from threshold products")
    _pair_args(p)
    _common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep", help="classify a (tau1, tau2) grid")
    p.add_argument("--graph-a")
    p.add_argument("--graph-b")
    p.add_argument("--tau1", required=True, help="min:max:steps")
    p.add_argument("--tau2", required=True, help="min:max:steps")
    p.add_argument("--verify", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("equilibria", help="multi-start equilibrium discovery")
    _pair_args(p)
    p.add_argument("--seeds", type=int)
    _common(p)
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("monotone-test", help="random monotonicity trials")
    _pair_args(p)
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--t-end", type=float, default=5.0)
    _common(p)
    p.set_defaults(func=cmd_monotone)

    p = sub.add_parser("run", help="full experiment from a config file")
    _common(p)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_dict(args)
        args.func(args, cfg)
    except (BivirusError, OSError, ValueError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
