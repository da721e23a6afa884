"""Parameter and state containers shared by every model module."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

#: Drift allowed when testing membership of the state space D.
D_TOL = 1e-9


@dataclass(frozen=True)
class VirusParams:
    """Infection rate ``beta`` and recovery rate ``delta`` of one virus."""

    beta: float
    delta: float

    def __post_init__(self):
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not (self.delta > 0 and np.isfinite(self.delta)):
            raise ValueError(f"delta must be positive, got {self.delta}")
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def tau(self) -> float:
        """Effective spreading strength beta/delta."""
        return self.beta / self.delta

    @classmethod
    def from_tau(cls, tau: float, delta: float = 1.0) -> "VirusParams":
        return cls(tau * delta, delta)

    def scaled(self, c: float) -> "VirusParams":
        return VirusParams(c * self.beta, c * self.delta)


def _frozen(v) -> np.ndarray:
    arr = np.array(v, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BiVirusState:
    """Infection probabilities ``x`` (Virus 1) and ``y`` (Virus 2) per node."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x, y = _frozen(self.x), _frozen(self.y)
        if x.shape != y.shape:
            raise DimensionMismatch(f"x has {x.size} entries, y has {y.size}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    def stack(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    @classmethod
    def from_stack(cls, z) -> "BiVirusState":
        z = np.asarray(z, dtype=float)
        if z.ndim != 1 or z.size % 2:
            raise DimensionMismatch("stacked state must have even length")
        n = z.size // 2
        return cls(z[:n], z[n:])

    @classmethod
    def zeros(cls, n: int) -> "BiVirusState":
        return cls(np.zeros(n), np.zeros(n))

    def __eq__(self, other):
        if not isinstance(other, BiVirusState):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)

    __hash__ = None

    def __repr__(self):
        return f"BiVirusState(x={self.x.tolist()}, y={self.y.tolist()})"


def in_state_space(s: BiVirusState, tol: float = D_TOL) -> bool:
    """True iff ``x >= -tol``, ``y >= -tol`` and ``x + y <= 1 + tol`` componentwise."""
    x, y = s.x, s.y
    return bool(np.all(x >= -tol) and np.all(y >= -tol) and np.all(x + y <= 1.0 + tol))
