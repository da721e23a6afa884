"""Southeast cone ordering, Kamke sign checks and monotonicity trials.

The southeast ordering on pairs ``(x, y)`` orders ``x`` upwards and ``y``
downwards: ``(x, y) <=_K (x', y')`` iff ``x <= x'`` and ``y >= y'``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import (
    LOCAL_ERROR_TOL,
    _d_check,
    _field_arrays,
    rk4_adaptive,
    sample_interior_state,
    step_cap,
)
from .errors import DimensionMismatch, StateOutOfD
from .graph import Graph
from .spectral import JacobianMatrix
from .state import BiVirusState, VirusParams, in_state_space

STRICT_MARGIN = 1e-12


class Ordering(enum.Enum):
    EQUAL = "Equal"
    LEQ = "Leq"  # ordered only up to the comparison slack
    LT = "Lt"
    LL = "Ll"
    INCOMPARABLE = "Incomparable"


_IMPLIES = {
    Ordering.EQUAL: {Ordering.EQUAL, Ordering.LEQ},
    Ordering.LEQ: {Ordering.LEQ},
    Ordering.LT: {Ordering.LT, Ordering.LEQ},
    Ordering.LL: {Ordering.LL, Ordering.LT, Ordering.LEQ},
    Ordering.INCOMPARABLE: {Ordering.INCOMPARABLE},
}


def satisfies(rel: Ordering, required: Ordering) -> bool:
    """Whether ``rel`` implies ``required`` (``Ll => Lt => Leq``, ``Equal => Leq``)."""
    return required in _IMPLIES[rel]


def se_compare(
    s1: BiVirusState, s2: BiVirusState, margin: float = STRICT_MARGIN, slack: float = 0.0
) -> Ordering:
    """Strongest southeast relation of ``s1`` to ``s2``.

    Strict (``Ll``) inequalities need a gap larger than ``margin``. With a
    positive ``slack``, pairs that are ordered only up to ``slack`` report ``Leq``.
    """
    if s1.n != s2.n:
        raise DimensionMismatch("states have different sizes")
    dx = s2.x - s1.x
    dy = s1.y - s2.y
    if np.array_equal(s1.x, s2.x) and np.array_equal(s1.y, s2.y):
        return Ordering.EQUAL
    if np.all(dx > margin) and np.all(dy > margin):
        return Ordering.LL
    if np.all(dx >= 0) and np.all(dy >= 0):
        return Ordering.LT
    if slack > 0 and np.all(dx >= -slack) and np.all(dy >= -slack):
        return Ordering.LEQ
    return Ordering.INCOMPARABLE


def se_margin(s1: BiVirusState, s2: BiVirusState) -> float:
    """``min(min(x2 - x1), min(y1 - y2))``: positive iff ``s1 <<_K s2``."""
    return float(min(np.min(s2.x - s1.x), np.min(s1.y - s2.y)))


def kamke_check(j: JacobianMatrix, atol: float = 0.0) -> bool:
    """Sign pattern of a southeast-cooperative Jacobian.

    Off-diagonal entries of the diagonal blocks must be ``>= -atol`` and all
    entries of the off-diagonal blocks ``<= atol``; diagonals are free.
    """
    tl, tr, bl, br = j.blocks
    off = ~np.eye(j.n, dtype=bool)
    return bool(
        np.all(tl[off] >= -atol)
        and np.all(br[off] >= -atol)
        and np.all(tr <= atol)
        and np.all(bl <= atol)
    )


@dataclass
class TrialResult:
    times: np.ndarray
    relations: list[Ordering]
    margins: np.ndarray
    initial: Ordering
    strong_required: bool
    passed: bool

    @property
    def min_margin(self) -> float:
        """Smallest strict separation over samples with ``t > 0``."""
        later = self.margins[self.times > 0]
        return float(np.min(later)) if later.size else float("nan")


def monotonicity_trial(
    s1: BiVirusState,
    s2: BiVirusState,
    p1: VirusParams,
    p2: VirusParams,
    a: Graph,
    b: Graph,
    sample_times: Sequence[float],
    dt0: float = 0.01,
    margin: float = STRICT_MARGIN,
) -> TrialResult:
    """Integrate two ordered states side by side and check the order is kept.

    Both copies are advanced as one stacked system, so they share every
    accepted step. Passing requires ``Leq`` at every sample and, for strictly
    ordered (``Lt``) interior pairs, ``Ll`` at every sample with ``t > 0``.
    """
    initial = se_compare(s1, s2, margin)
    if not satisfies(initial, Ordering.LEQ):
        raise ValueError(f"initial states are not ordered ({initial.value})")
    for s in (s1, s2):
        if not in_state_space(s, 0.0):
            raise StateOutOfD("initial state lies outside D")
    n = s1.n
    A, B = a.adjacency, b.adjacency

    def f(z):
        g1, h1 = _field_arrays(z[:n], z[n : 2 * n], p1, p2, A, B)
        g2, h2 = _field_arrays(z[2 * n : 3 * n], z[3 * n :], p1, p2, A, B)
        return np.concatenate([g1, h1, g2, h2])

    d_check = _d_check(n)

    def check(z, t):
        d_check(z[: 2 * n], t)
        d_check(z[2 * n :], t)

    cap = step_cap(p1, p2, A, B)
    z0 = np.concatenate([s1.stack(), s2.stack()])
    run = rk4_adaptive(
        f, z0, max(sample_times), dt0, 1.0, LOCAL_ERROR_TOL, stop_residual=0.0,
        check=check, sample_times=sample_times,
        step_cap=lambda z: min(cap(z[: 2 * n]), cap(z[2 * n :])),
    )
    interior = all(
        np.all(s.x > 0) and np.all(s.y > 0) and np.all(s.x + s.y < 1) for s in (s1, s2)
    )
    strong = initial in (Ordering.LT, Ordering.LL) and interior
    relations, margins = [], []
    passed = True
    for t, z in zip(run.times, run.samples):
        u = BiVirusState.from_stack(z[: 2 * n])
        w = BiVirusState.from_stack(z[2 * n :])
        rel = se_compare(u, w, margin)
        relations.append(rel)
        margins.append(se_margin(u, w))
        if not satisfies(rel, Ordering.LEQ):
            passed = False
        if strong and t > 0 and rel is not Ordering.LL:
            passed = False
    return TrialResult(np.array(run.times), relations, np.array(margins), initial, strong, passed)


def random_ordered_pair(rng: np.random.Generator, n: int) -> tuple[BiVirusState, BiVirusState]:
    """Two interior states with ``s1 <_K s2``.

    About half the pairs are moved apart at every node (``<<_K``); the rest
    only at a random subset of nodes.
    """
    s1 = sample_interior_state(rng, n)
    room = 1.0 - s1.x - s1.y
    mask = np.ones(n, dtype=bool) if rng.random() < 0.5 else rng.random(n) < 0.5
    mask[rng.integers(n)] = True
    # move x up and y down by fractions of the available room
    up = rng.uniform(0.05, 0.5, n) * (room + s1.y) * mask
    down = rng.uniform(0.05, 0.5, n) * s1.y * mask
    x2 = s1.x + np.minimum(up, room + down) * 0.9
    y2 = s1.y - down
    return s1, BiVirusState(x2, y2)
