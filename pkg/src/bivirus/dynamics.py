"""Bi-virus ODE: vector field, trajectory integration and equilibrium discovery."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BivirusError,
    DimensionMismatch,
    InvarianceViolated,
    LeftStateSpace,
    NewtonDiverged,
    NotConverged,
    StateOutOfD,
)
from .graph import Graph
from .spectral import Stability, jacobian_bivirus, pf_eigenpair, stability_at
from .state import D_TOL, BiVirusState, VirusParams, in_state_space

log = logging.getLogger(__name__)

RNG_NAME = "PCG64"
LOCAL_ERROR_TOL = 1e-9
EQUILIBRIUM_STOP = 1e-12
NEWTON_BASIN = 1e-4
CLUSTER_TOL = 1e-6
SNAP_TOL = 1e-12


def _check_dims(s: BiVirusState, a: Graph, b: Graph):
    if a.n != s.n or b.n != s.n:
        raise DimensionMismatch(f"state has {s.n} nodes, graphs have {a.n} and {b.n}")


def _field_arrays(x, y, p1: VirusParams, p2: VirusParams, A, B):
    s = 1.0 - x - y
    gx = s * (p1.beta * (A @ x)) - p1.delta * x
    hy = s * (p2.beta * (B @ y)) - p2.delta * y
    return gx, hy


def bivirus_field(
    s: BiVirusState, p1: VirusParams, p2: VirusParams, a: Graph, b: Graph
) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side ``(G(x, y), H(x, y))`` of the linear bi-virus system."""
    _check_dims(s, a, b)
    if not in_state_space(s):
        raise StateOutOfD("state lies outside D")
    return _field_arrays(s.x, s.y, p1, p2, a.adjacency, b.adjacency)


def field_residual(s: BiVirusState, p1, p2, a, b) -> float:
    gx, hy = bivirus_field(s, p1, p2, a, b)
    return max(float(np.max(np.abs(gx))), float(np.max(np.abs(hy))))


def avg_projection(s: BiVirusState) -> tuple[float, float]:
    """Population-averaged infection levels ``(avgX, avgY)``."""
    return float(np.mean(s.x)), float(np.mean(s.y))


# --------------------------------------------------------------------------
# integration


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    terminal_residual: float
    equilibrium_reached: bool = False

    @property
    def states(self) -> list[BiVirusState]:
        return [BiVirusState(x, y) for x, y in zip(self.xs, self.ys)]

    @property
    def final(self) -> BiVirusState:
        return BiVirusState(self.xs[-1], self.ys[-1])

    def __len__(self):
        return self.times.size


@dataclass
class _RawRun:
    times: list
    samples: list
    z: np.ndarray
    t: float
    residual: float
    stopped: bool


def _rk4_step(f, z, h, k1):
    k2 = f(z + 0.5 * h * k1)
    k3 = f(z + 0.5 * h * k2)
    k4 = f(z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    z0: np.ndarray,
    t_end: float,
    dt0: float,
    sample_every: float,
    tol: float = LOCAL_ERROR_TOL,
    stop_residual: float = EQUILIBRIUM_STOP,
    check: Callable[[np.ndarray, float], None] | None = None,
    residual: Callable[[np.ndarray], float] | None = None,
    sample_times: Sequence[float] | None = None,
    step_cap: Callable[[np.ndarray], float] | None = None,
) -> _RawRun:
    """Classic RK4 with step doubling.

    A step of size ``h`` is accepted when the doubling error estimate is at
    most ``tol * h``; the accepted value is the Richardson-extrapolated one.
    Samples are taken at every multiple of ``sample_every`` (and at ``t_end``)
    by shortening steps to land on them exactly; an explicit increasing list
    ``sample_times`` replaces that grid (and ``t_end`` becomes its last entry).
    Integration stops early when the field max-norm drops below ``stop_residual``.
    Steps never exceed ``step_cap(z)`` at the current state; near a zero state
    the error estimate vanishes, so without a cap the step would grow past the
    RK4 stability region.
    """
    if residual is None:
        residual = lambda k: float(np.max(np.abs(k)))
    if sample_times is None:
        count = max(1, int(math.ceil(t_end / sample_every - 1e-12)))
        grid = [min(k * sample_every, t_end) for k in range(1, count + 1)]
    else:
        grid = [float(t) for t in sample_times if t > 0]
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("sample_times must be increasing with a positive entry")
        t_end = grid[-1]
    z = np.array(z0, dtype=float)
    t = 0.0
    if step_cap is None:
        step_cap = lambda z: math.inf
    h = min(float(dt0), step_cap(z))
    times, samples = [0.0], [z.copy()]

    def sample_time(k):
        return grid[min(k, len(grid)) - 1]

    next_k = 1
    k1 = f(z)
    res = residual(k1)
    h_ctrl = h
    while True:
        if res < stop_residual:
            if times[-1] != t:
                times.append(t)
                samples.append(z.copy())
            return _RawRun(times, samples, z, t, res, True)
        if t >= t_end:
            return _RawRun(times, samples, z, t, res, False)
        target = sample_time(next_k)
        landing = h_ctrl >= target - t
        h = target - t if landing else h_ctrl
        full = _rk4_step(f, z, h, k1)
        half = _rk4_step(f, z, 0.5 * h, k1)
        two = _rk4_step(f, half, 0.5 * h, f(half))
        err = float(np.max(np.abs(two - full))) / 15.0
        factor = 4.0 if err == 0 else min(4.0, max(0.2, 0.9 * (tol * h / err) ** 0.25))
        if err <= tol * h:
            z = two + (two - full) / 15.0
            t = target if landing else t + h
            if check is not None:
                check(z, t)
            if landing:
                times.append(t)
                samples.append(z.copy())
                next_k += 1
            k1 = f(z)
            res = residual(k1)
            # a shortened landing step carries no information against h_ctrl
            h_ctrl = max(h_ctrl, h * factor) if landing else h * factor
            h_ctrl = min(h_ctrl, step_cap(z))
        else:
            h_ctrl = h * factor
            if h_ctrl < 1e-13 * max(1.0, t_end):
                raise NotConverged(f"step size underflow at t={t:.6g}")


def _gershgorin_weights(m: np.ndarray) -> tuple[np.ndarray, float]:
    try:
        pf = pf_eigenpair(m)
        return pf.vector, pf.value
    except BivirusError:
        # reducible graph: plain row sums
        return np.ones(m.shape[0]), float(np.max(m.sum(axis=1)))


def step_cap(
    p1: VirusParams, p2: VirusParams, A: np.ndarray, B: np.ndarray
) -> Callable[[np.ndarray], float]:
    """Stability cap ``h(z) = 2 / rho(z)`` for RK4 on the bi-virus field.

    ``rho(z)`` bounds the Jacobian spectral radius at ``z`` by Gershgorin's
    theorem applied to ``W^-1 J W`` with ``W = diag(v_A, v_B)``, the Perron
    vectors of the two graphs. Row ``i`` of the first block then sums to at
    most ``beta1 (s_i lam_A + (A x)_i (1 + v_B,i / v_A,i)) + delta1``, which
    reduces to ``beta1 lam_A + delta1`` at the origin. With ``h rho <= 2``
    every ``h lambda`` in the closed left half-plane lies where the RK4
    amplification factor is below one.
    """
    va, lam_a = _gershgorin_weights(A)
    vb, lam_b = _gershgorin_weights(B)
    ra, rb = 1.0 + vb / va, 1.0 + va / vb
    n = va.size

    def cap(z):
        x, y = z[:n], z[n:]
        s = 1.0 - x - y
        rx = p1.beta * (s * lam_a + (A @ x) * ra) + p1.delta
        ry = p2.beta * (s * lam_b + (B @ y) * rb) + p2.delta
        return 2.0 / max(float(np.max(rx)), float(np.max(ry)))

    return cap


def _d_check(n: int):
    def check(z, t):
        x, y = z[:n], z[n:]
        if np.any(x < -D_TOL) or np.any(y < -D_TOL) or np.any(x + y > 1.0 + D_TOL):
            raise InvarianceViolated(f"trajectory left D at t={t:.6g}")

    return check


def integrate(
    s0: BiVirusState,
    p1: VirusParams,
    p2: VirusParams,
    a: Graph,
    b: Graph,
    t_end: float,
    dt0: float = 0.01,
    sample_every: float | None = None,
    tol: float = LOCAL_ERROR_TOL,
    stop_residual: float = EQUILIBRIUM_STOP,
) -> Trajectory:
    """Integrate the bi-virus system from ``s0`` up to ``t_end``.

    States are never clamped: leaving D by more than ``1e-9`` raises
    :class:`InvarianceViolated`.
    """
    _check_dims(s0, a, b)
    if not in_state_space(s0, 0.0):
        raise StateOutOfD("initial state lies outside D")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if sample_every is None:
        sample_every = t_end
    n = s0.n
    A, B = a.adjacency, b.adjacency

    def f(z):
        gx, hy = _field_arrays(z[:n], z[n:], p1, p2, A, B)
        return np.concatenate([gx, hy])

    run = rk4_adaptive(
        f, s0.stack(), t_end, dt0, sample_every, tol, stop_residual, check=_d_check(n),
        step_cap=step_cap(p1, p2, A, B),
    )
    zs = np.array(run.samples)
    return Trajectory(np.array(run.times), zs[:, :n], zs[:, n:], run.residual, run.stopped)


# --------------------------------------------------------------------------
# equilibria


def _snap(z: np.ndarray) -> np.ndarray:
    out = z.copy()
    out[np.abs(out) < SNAP_TOL] = 0.0
    return out


def newton_refine(
    s: BiVirusState,
    p1: VirusParams,
    p2: VirusParams,
    a: Graph,
    b: Graph,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> tuple[BiVirusState, float]:
    """Newton iteration on ``(G, H) = 0`` starting from ``s``."""
    n = s.n
    A, B = a.adjacency, b.adjacency

    def F(z):
        return np.concatenate(_field_arrays(z[:n], z[n:], p1, p2, A, B))

    z = s.stack()
    r = F(z)
    res = float(np.max(np.abs(r)))
    best = (z, res)
    step = math.inf
    for _ in range(max_iter):
        # a small residual alone is not enough: near 0 the field is O(|z|), so
        # z ~ 1e-12 passes the residual test while one more step lands on 0
        if res == 0.0 or (res < tol and step <= tol):
            break
        state = BiVirusState.from_stack(z)
        if not in_state_space(state):
            raise LeftStateSpace("Newton iterate left D")
        J = jacobian_bivirus(state, p1, p2, a, b).matrix
        try:
            dz = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise NewtonDiverged(f"singular Jacobian: {exc}") from None
        z = z + dz
        step = float(np.max(np.abs(dz)))
        r = F(z)
        new_res = float(np.max(np.abs(r)))
        if not np.isfinite(new_res):
            raise NewtonDiverged("Newton produced non-finite values")
        res = new_res
        if res <= best[1]:
            best = (z, res)
    else:
        if res >= tol:
            raise NewtonDiverged(f"Newton stalled at residual {res:.3e}")
    z, res = best
    snapped = _snap(z)
    snapped_res = float(np.max(np.abs(F(snapped))))
    if snapped_res <= max(res, tol):
        z, res = snapped, snapped_res
    out = BiVirusState.from_stack(z)
    if not in_state_space(out):
        raise LeftStateSpace("refined equilibrium lies outside D")
    return out, res


def find_equilibrium(
    t: Trajectory,
    p1: VirusParams,
    p2: VirusParams,
    a: Graph,
    b: Graph,
    tol: float = 1e-12,
) -> tuple[BiVirusState, float]:
    """Refine the end point of a trajectory to a fixed point by Newton's method."""
    if t.terminal_residual >= NEWTON_BASIN:
        raise NewtonDiverged(
            f"terminal residual {t.terminal_residual:.3e} is outside the Newton basin"
        )
    return newton_refine(t.final, p1, p2, a, b, tol)


def sample_interior_state(rng: np.random.Generator, n: int) -> BiVirusState:
    """Draw ``(x_i, y_i)`` uniformly on the triangle ``x_i, y_i > 0, x_i + y_i <= 1``."""
    x = np.empty(n)
    y = np.empty(n)
    for i in range(n):
        while True:
            u, v = rng.random(2)
            if u > 0 and v > 0 and u + v <= 1.0:
                x[i], y[i] = u, v
                break
    return BiVirusState(x, y)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class EquilibriumPoint:
    state: BiVirusState
    residual: float
    stability: Stability
    seeds: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        ax, ay = avg_projection(self.state)
        return {
            "x": self.state.x.tolist(),
            "y": self.state.y.tolist(),
            "avgX": ax,
            "avgY": ay,
            "residual": self.residual,
            "stability": self.stability.value,
            "seeds": list(self.seeds),
        }


@dataclass
class EquilibriumSet:
    points: list[EquilibriumPoint]
    cluster_tolerance: float = CLUSTER_TOL
    rng: str = RNG_NAME
    rng_seed: int | None = None
    errors: list[tuple[int, str]] = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def to_dict(self) -> dict:
        return {
            "cluster_tolerance": self.cluster_tolerance,
            "rng": self.rng,
            "rng_seed": self.rng_seed,
            "points": [p.to_dict() for p in self.points],
            "errors": [{"seed": k, "error": msg} for k, msg in self.errors],
        }


def collect_equilibria(
    terminals: list[tuple[int, Trajectory | BivirusError]],
    p1: VirusParams,
    p2: VirusParams,
    a: Graph,
    b: Graph,
    newton_tol: float = 1e-12,
    cluster_tol: float = CLUSTER_TOL,
) -> tuple[list[EquilibriumPoint], list[tuple[int, str]]]:
    """Refine per-seed trajectories and merge the results in seed order."""
    points: list[EquilibriumPoint] = []
    errors: list[tuple[int, str]] = []
    for seed, traj in terminals:
        if isinstance(traj, BivirusError):
            errors.append((seed, f"{type(traj).__name__}: {traj}"))
            continue
        try:
            eq, res = find_equilibrium(traj, p1, p2, a, b, newton_tol)
        except BivirusError as exc:
            errors.append((seed, f"{type(exc).__name__}: {exc}"))
            continue
        z = eq.stack()
        for pt in points:
            if float(np.max(np.abs(pt.state.stack() - z))) <= cluster_tol:
                pt.seeds.append(seed)
                break
        else:
            try:
                stab = stability_at(eq, p1, p2, a, b)
            except BivirusError as exc:
                errors.append((seed, f"{type(exc).__name__}: {exc}"))
                continue
            points.append(EquilibriumPoint(eq, res, stab, [seed]))
    return points, errors


def run_to_equilibrium(
    s0: BiVirusState,
    p1: VirusParams,
    p2: VirusParams,
    a: Graph,
    b: Graph,
    stop_residual: float = 1e-8,
    t_max: float = 1e5,
    dt0: float = 0.01,
) -> Trajectory:
    """Integrate until the field norm falls below ``stop_residual``."""
    traj = integrate(s0, p1, p2, a, b, t_max, dt0, t_max, stop_residual=stop_residual)
    if not traj.equilibrium_reached:
        raise NotConverged(
            f"no equilibrium by t={t_max:g} (residual {traj.terminal_residual:.3e})"
        )
    return traj


def multi_start_equilibria(
    p1: VirusParams,
    p2: VirusParams,
    a: Graph,
    b: Graph,
    n_seeds: int,
    rng_seed: int,
    stop_residual: float = 1e-8,
    newton_tol: float = 1e-12,
    cluster_tol: float = CLUSTER_TOL,
    t_max: float = 1e5,
) -> EquilibriumSet:
    """Equilibria reached from ``n_seeds`` random starts with ``x > 0`` and ``y > 0``.

    Per-seed failures are recorded in ``errors`` rather than raised.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    _check_dims(BiVirusState.zeros(a.n), a, b)
    rng = make_rng(rng_seed)
    starts = [sample_interior_state(rng, a.n) for _ in range(n_seeds)]
    terminals: list[tuple[int, Trajectory | BivirusError]] = []
    for k, s0 in enumerate(starts):
        try:
            terminals.append((k, run_to_equilibrium(s0, p1, p2, a, b, stop_residual, t_max)))
        except BivirusError as exc:
            log.warning("seed %d failed: %s", k, exc)
            terminals.append((k, exc))
    points, errors = collect_equilibria(terminals, p1, p2, a, b, newton_tol, cluster_tol)
    return EquilibriumSet(points, cluster_tol, RNG_NAME, rng_seed, errors)
