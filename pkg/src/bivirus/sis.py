"""Single-virus SIS model: vector field, epidemic threshold and endemic fixed point."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotConverged
from .graph import Graph
from .spectral import DEFAULT_TOL, spectral_radius
from .state import VirusParams

FP_TOL = 1e-12
FP_MAX_ITER = 10**6
# products within this band above 1 count as the boundary (die-out) case
THRESHOLD_BAND = 1e-9


class SisRegime(enum.Enum):
    VIRUS_FREE = "VirusFree"
    ENDEMIC = "Endemic"


@dataclass(frozen=True)
class DichotomyVerdict:
    product: float
    regime: SisRegime


@dataclass(frozen=True, eq=False)
class SisFixedPoint:
    x_star: np.ndarray
    residual: float
    regime: SisRegime
    iterations: int = 0


def sis_field(x, p: VirusParams, g: Graph) -> np.ndarray:
    """``beta * (1 - x) * (A x) - delta * x`` componentwise."""
    x = np.asarray(x, dtype=float)
    if x.shape != (g.n,):
        raise DimensionMismatch(f"state has shape {x.shape}, graph has {g.n} nodes")
    return (1.0 - x) * (p.beta * (g.adjacency @ x)) - p.delta * x


def sis_threshold(p: VirusParams, g: Graph, lam: float | None = None) -> DichotomyVerdict:
    """Compare ``tau * lambda(A)`` with 1; equality (within ``THRESHOLD_BAND``) counts as die-out."""
    if lam is None:
        lam = spectral_radius(g, DEFAULT_TOL)
    product = p.tau * lam
    regime = SisRegime.VIRUS_FREE if product <= 1.0 + THRESHOLD_BAND else SisRegime.ENDEMIC
    return DichotomyVerdict(product, regime)


def sis_map(x: np.ndarray, tau: float, adjacency: np.ndarray) -> np.ndarray:
    """The monotone map whose fixed points are the SIS equilibria.

    Setting the SIS field to zero gives ``x_i = tau (Ax)_i / (1 + tau (Ax)_i)``.
    """
    u = tau * (adjacency @ x)
    return u / (1.0 + u)


def sis_fixed_point(
    p: VirusParams,
    g: Graph,
    tol: float = FP_TOL,
    max_iter: int = FP_MAX_ITER,
    lam: float | None = None,
) -> SisFixedPoint:
    """Globally attractive fixed point of the SIS model.

    Below (or at) the threshold this is 0. Above it, the map :func:`sis_map` is
    iterated from the all-ones vector; the iterates decrease monotonically to
    the unique positive fixed point.
    """
    verdict = sis_threshold(p, g, lam)
    if verdict.regime is SisRegime.VIRUS_FREE:
        return SisFixedPoint(np.zeros(g.n), 0.0, SisRegime.VIRUS_FREE, 0)
    A = g.adjacency
    x = np.ones(g.n)
    for k in range(1, max_iter + 1):
        nxt = sis_map(x, p.tau, A)
        step = float(np.max(np.abs(nxt - x)))
        x = nxt
        if step < tol:
            residual = float(np.max(np.abs(sis_field(x, p, g))))
            # the step test alone is loose when the contraction rate is near 1
            if residual < tol or step == 0.0:
                return SisFixedPoint(x, residual, SisRegime.ENDEMIC, k)
    raise NotConverged(f"SIS fixed-point iteration did not converge in {max_iter} steps")
