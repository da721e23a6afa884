"""Perron-Frobenius eigenpairs, bi-virus Jacobians and fixed-point stability.

Everything here is built on a single power-iteration kernel, finished by
Noda iteration when the spectral gap is too small for plain iteration. Nonnegative
irreducible matrices are iterated directly (after a small diagonal shift that
removes periodicity, e.g. for bipartite graphs). Jacobians of the bi-virus
system are cooperative with respect to the southeast ordering, so after the
change of sign ``diag(I, -I)`` they become Metzler and a shift by a multiple of
the identity makes them nonnegative.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    DimensionMismatch,
    NotAnEquilibrium,
    NotConverged,
    NotIrreducible,
    ShiftInsufficient,
    StateOutOfD,
    ZeroScale,
)
from .graph import Graph
from .state import BiVirusState, VirusParams, in_state_space

DEFAULT_TOL = 1e-10
MARGINAL_BAND = 1e-8
EQUILIBRIUM_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class EigenPair:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int = 0


@dataclass(frozen=True, eq=False)
class JacobianMatrix:
    """Dense Jacobian, optionally tagged with its ``n x n`` block size.

    When ``n`` is set the matrix is ``2n x 2n`` and ordered ``(x, y)``.
    """

    matrix: np.ndarray
    n: int | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch("Jacobian must be square")
        if self.n is not None and m.shape[0] != 2 * self.n:
            raise DimensionMismatch(f"expected {2 * self.n} rows, got {m.shape[0]}")
        object.__setattr__(self, "matrix", m)

    @property
    def blocks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``(top_left, top_right, bottom_left, bottom_right)``."""
        if self.n is None:
            raise ValueError("matrix has no block structure")
        n, m = self.n, self.matrix
        return m[:n, :n], m[:n, n:], m[n:, :n], m[n:, n:]


def _max_iter(n: int, tol: float) -> int:
    return max(1000, int(math.ceil(100 * n * math.log(1.0 / tol))))


POWER_WARMUP = 500


def _power_iteration(m: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray, float, int]:
    """Power iteration on a nonnegative matrix with positive diagonal, from the all-ones vector.

    Stops once successive Rayleigh quotients differ by less than ``tol`` and
    the residual ``||m v - rq v||_inf`` (with ``||v||_inf = 1``) is below ``tol``.
    If plain iteration has not converged after ``POWER_WARMUP`` steps (a small
    spectral gap), the remaining budget goes to Noda iteration.
    """
    v = np.ones(m.shape[0])
    rq_prev = math.inf
    for k in range(1, max_iter + 1):
        w = m @ v
        rq = float(v @ w) / float(v @ v)
        res = float(np.max(np.abs(w - rq * v)))
        if abs(rq - rq_prev) < tol and res < tol:
            return rq, v, res, k
        rq_prev = rq
        scale = np.max(np.abs(w))
        if scale == 0:
            # nilpotent direction; the spectral radius is 0
            return 0.0, v, res, k
        v = w / scale
        if k == POWER_WARMUP and np.all(v > 0):
            return _noda_iteration(m, v, tol, max_iter, k)
    raise NotConverged(f"power iteration did not converge in {max_iter} iterations (residual {res:.3e})")


def _noda_iteration(
    m: np.ndarray, v: np.ndarray, tol: float, max_iter: int, k0: int
) -> tuple[float, np.ndarray, float, int]:
    """Inverse iteration shifted by the Collatz-Wielandt upper bound ``max (m v)_i / v_i``.

    The shift never drops below the PF eigenvalue, so ``(sigma I - m)^-1`` is
    nonnegative and iterates stay positive; convergence is superlinear.
    """
    eye = np.eye(m.shape[0])
    rq_prev = math.inf
    res = math.inf
    for k in range(k0 + 1, max_iter + 1):
        w = m @ v
        rq = float(v @ w) / float(v @ v)
        res = float(np.max(np.abs(w - rq * v)))
        if abs(rq - rq_prev) < tol and res < tol:
            return rq, v, res, k
        rq_prev = rq
        sigma = float(np.max(w / v))
        try:
            z = np.linalg.solve(sigma * eye - m, v)
        except np.linalg.LinAlgError:
            # sigma hit the eigenvalue exactly; v is already an eigenvector
            if res < tol:
                return rq, v, res, k
            break
        z = np.abs(z)
        scale = np.max(z)
        if not np.isfinite(scale) or scale == 0:
            break
        v = z / scale
    raise NotConverged(f"power iteration did not converge in {max_iter} iterations (residual {res:.3e})")


def is_irreducible(m: np.ndarray) -> bool:
    m = np.asarray(m)
    if m.shape[0] == 1:
        return True
    support = csr_matrix(m != 0)
    ncomp, _ = connected_components(support, directed=True, connection="strong")
    return ncomp == 1


def pf_eigenpair(m, tol: float = DEFAULT_TOL, max_iter: int | None = None) -> EigenPair:
    """Perron-Frobenius eigenvalue and positive eigenvector of ``m``.

    ``m`` must be square, entrywise nonnegative and irreducible. The vector is
    scaled to unit max-norm.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch("matrix must be square")
    if np.any(m < 0):
        raise NotIrreducible("matrix has negative entries")
    if not is_irreducible(m):
        raise NotIrreducible("matrix is reducible")
    n = m.shape[0]
    if max_iter is None:
        max_iter = _max_iter(n, tol)
    # m + cI is primitive for any c > 0; the mean row sum keeps c on the scale of lambda
    c = max(float(m.sum() / n), np.finfo(float).tiny)
    rq, v, res, k = _power_iteration(m + c * np.eye(n), tol, max_iter)
    if not np.all(v > 0):
        raise NotConverged("Perron vector has non-positive entries")
    return EigenPair(rq - c, v, res, k)


def spectral_radius(g: Graph, tol: float = DEFAULT_TOL) -> float:
    return pf_eigenpair(g.adjacency, tol).value


def scaled_spectral(s, g: Graph, tol: float = DEFAULT_TOL) -> float:
    """PF eigenvalue of ``diag(s) @ A`` for a scale vector ``s`` in ``(0, 1]^N``."""
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.size != g.n:
        raise DimensionMismatch(f"scale vector has {s.size} entries, graph has {g.n} nodes")
    if np.any(s < 0) or np.any(s > 1):
        raise ValueError("scale entries must lie in [0, 1]")
    if np.any(s == 0):
        raise ZeroScale("scale vector has a zero entry; diag(s) A is reducible")
    return pf_eigenpair(s[:, None] * g.adjacency, tol).value


def jacobian_bivirus(
    state: BiVirusState, p1: VirusParams, p2: VirusParams, a: Graph, b: Graph
) -> JacobianMatrix:
    """Jacobian of the linear bi-virus vector field at ``state``."""
    n = state.n
    if a.n != n or b.n != n:
        raise DimensionMismatch("state and graphs disagree on node count")
    if not in_state_space(state):
        raise StateOutOfD("state lies outside D")
    x, y = state.x, state.y
    A, B = a.adjacency, b.adjacency
    s = 1.0 - x - y
    ax, by = A @ x, B @ y
    eye = np.eye(n)
    tl = p1.beta * s[:, None] * A - np.diag(p1.beta * ax) - p1.delta * eye
    tr = -np.diag(p1.beta * ax)
    bl = -np.diag(p2.beta * by)
    br = p2.beta * s[:, None] * B - np.diag(p2.beta * by) - p2.delta * eye
    return JacobianMatrix(np.block([[tl, tr], [bl, br]]), n)


def _southeast_flip(j: JacobianMatrix) -> np.ndarray:
    if j.n is None:
        return j.matrix.copy()
    sign = np.concatenate([np.ones(j.n), -np.ones(j.n)])
    return sign[:, None] * j.matrix * sign[None, :]


def leading_eigen_shifted(j, tol: float = DEFAULT_TOL, max_iter: int | None = None) -> EigenPair:
    """Largest-real-part eigenpair of a (southeast-)cooperative matrix.

    Block-tagged matrices are first conjugated by ``diag(I, -I)``; the result
    must be Metzler. With ``c = 1 + max absolute row sum`` the matrix ``M + cI``
    is nonnegative and its PF eigenvalue minus ``c`` is returned. The vector is
    mapped back to the original coordinates, so for a bi-virus Jacobian it has
    the form ``(u, v)`` with ``u >= 0 >= v``.
    """
    if not isinstance(j, JacobianMatrix):
        j = JacobianMatrix(np.asarray(j, dtype=float))
    m = _southeast_flip(j)
    size = m.shape[0]
    c = 1.0 + float(np.max(np.abs(m).sum(axis=1)))
    shifted = m + c * np.eye(size)
    if np.any(shifted < 0):
        raise ShiftInsufficient("matrix is not cooperative for the requested ordering")
    if max_iter is None:
        max_iter = _max_iter(size, tol)
    rq, v, _, k = _power_iteration(shifted, tol, max_iter)
    if j.n is not None:
        v = np.concatenate([v[: j.n], -v[j.n :]])
    lam = rq - c
    residual = float(np.max(np.abs(j.matrix @ v - lam * v)))
    return EigenPair(lam, v, residual, k)


class Stability(enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"


def classify_eigenvalue(lam: float, band: float = MARGINAL_BAND) -> Stability:
    if abs(lam) < band:
        return Stability.MARGINAL
    return Stability.STABLE if lam < 0 else Stability.UNSTABLE


def stability_at(
    eq: BiVirusState,
    p1: VirusParams,
    p2: VirusParams,
    a: Graph,
    b: Graph,
    eq_tol: float = EQUILIBRIUM_TOL,
    band: float = MARGINAL_BAND,
) -> Stability:
    """Linear stability of a fixed point from the sign of the leading Jacobian eigenvalue."""
    from .dynamics import bivirus_field

    gx, hy = bivirus_field(eq, p1, p2, a, b)
    residual = max(float(np.max(np.abs(gx))), float(np.max(np.abs(hy))))
    if residual >= eq_tol:
        raise NotAnEquilibrium(f"field norm {residual:.3e} at candidate equilibrium")
    lam = leading_eigen_shifted(jacobian_bivirus(eq, p1, p2, a, b)).value
    return classify_eigenvalue(lam, band)
