"""Generic (nonlinear) infection rates for the bi-virus model.

The linear model uses the rate ``beta * A x``. Here the rate is any map
``f: [0,1]^N -> R_+^N`` with ``f(0) = 0``, monotone in the neighbours'
infection levels and concave, e.g. the built-in saturating family
``f_i(x) = beta * sum_j a_ij x_j / (1 + x_j)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, RateAssumptionViolated, ShiftInsufficient, StateOutOfD
from .graph import Graph
from .spectral import DEFAULT_TOL, leading_eigen_shifted
from .state import BiVirusState, in_state_space
from .dynamics import rk4_adaptive

FD_STEP = 1e-6
ZERO_TOL = 1e-12


class RateFamily(enum.Enum):
    LINEAR = "Linear"
    SATURATING = "Saturating"
    CUSTOM = "Custom"


@dataclass(frozen=True, eq=False)
class RateFunction:
    family: RateFamily
    evaluator: Callable[[np.ndarray], np.ndarray]
    n: int
    zero_jacobian: np.ndarray | None = None

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)

    def jacobian_at_zero(self) -> np.ndarray:
        if self.zero_jacobian is not None:
            return self.zero_jacobian
        # central differences around 0 (custom rates must accept small negative inputs)
        jac = np.empty((self.n, self.n))
        for j in range(self.n):
            e = np.zeros(self.n)
            e[j] = FD_STEP
            jac[:, j] = (self(e) - self(-e)) / (2 * FD_STEP)
        return jac

    @classmethod
    def linear(cls, beta: float, g: Graph) -> "RateFunction":
        W = g.adjacency
        return cls(RateFamily.LINEAR, lambda x: beta * (W @ x), g.n, beta * W)

    @classmethod
    def saturating(cls, beta: float, g: Graph) -> "RateFunction":
        W = g.adjacency
        return cls(RateFamily.SATURATING, lambda x: beta * (W @ (x / (1.0 + x))), g.n, beta * W)

    @classmethod
    def custom(cls, fn: Callable[[np.ndarray], np.ndarray], n: int) -> "RateFunction":
        rate = cls(RateFamily.CUSTOM, fn, n)
        f0 = rate(np.zeros(n))
        if f0.shape != (n,):
            raise DimensionMismatch(f"rate returned shape {f0.shape}, expected ({n},)")
        if np.max(np.abs(f0)) > ZERO_TOL:
            raise RateAssumptionViolated("custom rate has f(0) != 0")
        return rate


def _delta_vector(delta, n: int) -> np.ndarray | float:
    if np.ndim(delta) == 0:
        d = float(delta)
        if not d > 0:
            raise ValueError("recovery rate must be positive")
        return d
    d = np.asarray(delta, dtype=float)
    if d.shape != (n,):
        raise DimensionMismatch(f"recovery vector has shape {d.shape}, expected ({n},)")
    if np.any(d <= 0):
        raise ValueError("recovery rates must be positive")
    return d


def _checked(rate: RateFunction, x: np.ndarray) -> np.ndarray:
    fx = rate(x)
    if fx.shape != x.shape:
        raise DimensionMismatch("rate output shape differs from state shape")
    if np.any(fx < -ZERO_TOL):
        raise RateAssumptionViolated("infection rate is negative")
    return fx


def generic_field(
    s: BiVirusState, g_rate: RateFunction, h_rate: RateFunction, delta1, delta2
) -> tuple[np.ndarray, np.ndarray]:
    """``((1 - x - y) g(x) - delta1 x, (1 - x - y) h(y) - delta2 y)``."""
    n = s.n
    if g_rate.n != n or h_rate.n != n:
        raise DimensionMismatch("rate functions and state disagree on node count")
    if not in_state_space(s):
        raise StateOutOfD("state lies outside D")
    d1, d2 = _delta_vector(delta1, n), _delta_vector(delta2, n)
    sus = 1.0 - s.x - s.y
    gx = sus * _checked(g_rate, s.x) - d1 * s.x
    hy = sus * _checked(h_rate, s.y) - d2 * s.y
    return gx, hy


def _leading(m: np.ndarray) -> float:
    try:
        return leading_eigen_shifted(m, DEFAULT_TOL).value
    except ShiftInsufficient:
        raise RateAssumptionViolated("rate Jacobian at 0 has negative off-diagonal entries") from None


def _check_support(jac: np.ndarray, g: Graph | None):
    if g is None:
        return
    off = ~np.eye(g.n, dtype=bool)
    nz = np.abs(jac) > 1e-8
    if np.any(nz[off] != (g.adjacency[off] > 0)):
        raise RateAssumptionViolated("rate Jacobian support differs from the graph's edges")


def generic_sis_fixed_point(
    rate: RateFunction, delta, t_max: float = 1e5, stop_residual: float = 1e-12
) -> np.ndarray:
    """Attractor of ``dx/dt = (1 - x) f(x) - delta x`` by long-horizon integration from 1."""
    n = rate.n
    d = _delta_vector(delta, n)
    if _leading(rate.jacobian_at_zero() - np.diag(np.broadcast_to(d, (n,)))) <= 0:
        return np.zeros(n)

    def f(x):
        return (1.0 - x) * rate(x) - d * x

    run = rk4_adaptive(f, np.ones(n), t_max, 0.01, t_max, stop_residual=stop_residual)
    if not run.stopped:
        raise RateAssumptionViolated(
            f"generic SIS system did not settle by t={t_max:g} (residual {run.residual:.3e})"
        )
    return run.z


@dataclass(frozen=True, eq=False)
class GenericThresholds:
    t_hat_x: float
    t_hat_y: float
    t_x_ystar: float
    t_y_xstar: float
    x_star: np.ndarray
    y_star: np.ndarray


def generic_thresholds(
    g_rate: RateFunction,
    h_rate: RateFunction,
    delta1,
    delta2,
    a: Graph | None = None,
    b: Graph | None = None,
) -> GenericThresholds:
    """Threshold eigenvalues for the generic-rate model.

    ``t_hat_x = lambda(Jg(0) - diag(delta1))`` decides single-virus survival;
    ``t_x_ystar = lambda(diag(1 - y*) Jg(0) - diag(delta1))`` decides whether
    Virus 1 can invade Virus 2's endemic state (and symmetrically for ``y``).
    When graphs are given, the Jacobian supports are checked against their edges.
    """
    n = g_rate.n
    d1 = np.broadcast_to(_delta_vector(delta1, n), (n,))
    d2 = np.broadcast_to(_delta_vector(delta2, n), (n,))
    jg, jh = g_rate.jacobian_at_zero(), h_rate.jacobian_at_zero()
    _check_support(jg, a)
    _check_support(jh, b)
    t_hat_x = _leading(jg - np.diag(d1))
    t_hat_y = _leading(jh - np.diag(d2))
    x_star = generic_sis_fixed_point(g_rate, delta1)
    y_star = generic_sis_fixed_point(h_rate, delta2)
    t_x_ystar = _leading((1.0 - y_star)[:, None] * jg - np.diag(d1))
    t_y_xstar = _leading((1.0 - x_star)[:, None] * jh - np.diag(d2))
    return GenericThresholds(t_hat_x, t_hat_y, t_x_ystar, t_y_xstar, x_star, y_star)
