"""Classification of (tau1, tau2) into the virus-free / single-virus / coexistence trichotomy.

Region labels::

    R1  tau1*lam(A) <= 1 and tau2*lam(B) <= 1                -> (0, 0)
    R2  tau1*lam(A) > 1  and tau2*lam(B) <= 1                -> (x*, 0)
    R3  tau1*lam(A) <= 1 and tau2*lam(B) > 1                 -> (0, y*)
    R4  both survive alone, only Virus 2 can invade          -> (0, y*)
    R5  both survive alone, only Virus 1 can invade          -> (x*, 0)
    R6  each can invade the other's endemic state            -> coexistence

"Invade" means ``tau1*lam(diag(1 - y*) A) > 1`` for Virus 1 and
``tau2*lam(diag(1 - x*) B) > 1`` for Virus 2. The R4/R5 orientation is a
labelling convention (Virus 2 winner = R4); the attractors are what matter.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dynamics import EquilibriumSet, avg_projection, multi_start_equilibria
from .errors import BivirusError, InternalInconsistency
from .graph import Graph
from .sis import FP_TOL, THRESHOLD_BAND, sis_fixed_point
from .spectral import DEFAULT_TOL, scaled_spectral, spectral_radius
from .state import VirusParams

BOUNDARY_BAND = THRESHOLD_BAND
CLASS_TOL = 1e-4


class Region(enum.Enum):
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"
    R4 = "R4"
    R5 = "R5"
    R6 = "R6"


class Outcome(enum.Enum):
    VIRUS_FREE = "VirusFree"
    VIRUS1_ONLY = "Virus1Only"
    VIRUS2_ONLY = "Virus2Only"
    COEXISTENCE = "Coexistence"


_SWAP_REGION = {
    Region.R1: Region.R1,
    Region.R2: Region.R3,
    Region.R3: Region.R2,
    Region.R4: Region.R5,
    Region.R5: Region.R4,
    Region.R6: Region.R6,
}
_SWAP_OUTCOME = {
    Outcome.VIRUS_FREE: Outcome.VIRUS_FREE,
    Outcome.VIRUS1_ONLY: Outcome.VIRUS2_ONLY,
    Outcome.VIRUS2_ONLY: Outcome.VIRUS1_ONLY,
    Outcome.COEXISTENCE: Outcome.COEXISTENCE,
}


def swap_region(r: Region) -> Region:
    return _SWAP_REGION[r]


def swap_outcome(o: Outcome) -> Outcome:
    return _SWAP_OUTCOME[o]


@dataclass(frozen=True, eq=False)
class RegimeReport:
    tau1: float
    tau2: float
    lam_a: float
    lam_b: float
    t1_lamA: float
    t2_lamB: float
    t1_lamSyA: float
    t2_lamSxB: float
    region: Region
    predicted: Outcome
    x_star: np.ndarray
    y_star: np.ndarray
    boundary: bool = False

    @property
    def products(self) -> tuple[float, float, float, float]:
        return (self.t1_lamA, self.t2_lamB, self.t1_lamSyA, self.t2_lamSxB)

    def near_threshold(self, band: float) -> bool:
        """True when any threshold product lies within ``band`` of 1."""
        return any(abs(p - 1.0) <= band for p in self.products)

    def to_dict(self) -> dict:
        return {
            "tau1": self.tau1,
            "tau2": self.tau2,
            "lambda_A": self.lam_a,
            "lambda_B": self.lam_b,
            "t1_lamA": self.t1_lamA,
            "t2_lamB": self.t2_lamB,
            "t1_lamSyA": self.t1_lamSyA,
            "t2_lamSxB": self.t2_lamSxB,
            "region": self.region.value,
            "predicted": self.predicted.value,
            "boundary": self.boundary,
            "x_star": self.x_star.tolist(),
            "y_star": self.y_star.tolist(),
        }


def _survives(product: float) -> bool:
    return product > 1.0 + BOUNDARY_BAND


def _endemic_point(p: VirusParams, g: Graph, lam: float, fp_tol: float) -> np.ndarray:
    if not _survives(p.tau * lam):
        return np.zeros(g.n)
    return sis_fixed_point(p, g, fp_tol, lam=lam).x_star


def classify(
    p1: VirusParams,
    p2: VirusParams,
    a: Graph,
    b: Graph,
    *,
    eig_tol: float = DEFAULT_TOL,
    fp_tol: float = FP_TOL,
    lam_a: float | None = None,
    lam_b: float | None = None,
    x_star: np.ndarray | None = None,
    y_star: np.ndarray | None = None,
) -> RegimeReport:
    """Predict the long-run outcome of the bi-virus system from threshold products.

    Products within ``1e-9`` of 1 follow the die-out convention and set
    ``boundary=True``. Precomputed spectral radii and single-virus fixed
    points may be passed in to avoid recomputation during sweeps.
    """
    if lam_a is None:
        lam_a = spectral_radius(a, eig_tol)
    if lam_b is None:
        lam_b = spectral_radius(b, eig_tol)
    t1_lamA, t2_lamB = p1.tau * lam_a, p2.tau * lam_b
    if x_star is None:
        x_star = _endemic_point(p1, a, lam_a, fp_tol)
    if y_star is None:
        y_star = _endemic_point(p2, b, lam_b, fp_tol)
    surv1, surv2 = _survives(t1_lamA), _survives(t2_lamB)

    t1_lamSyA, t2_lamSxB = t1_lamA, t2_lamB
    if surv1 and surv2:
        t1_lamSyA = p1.tau * scaled_spectral(1.0 - y_star, a, eig_tol)
        t2_lamSxB = p2.tau * scaled_spectral(1.0 - x_star, b, eig_tol)

    if not surv1 and not surv2:
        region, predicted = Region.R1, Outcome.VIRUS_FREE
    elif surv1 and not surv2:
        region, predicted = Region.R2, Outcome.VIRUS1_ONLY
    elif surv2 and not surv1:
        region, predicted = Region.R3, Outcome.VIRUS2_ONLY
    else:
        inv1, inv2 = _survives(t1_lamSyA), _survives(t2_lamSxB)
        if inv1 and inv2:
            region, predicted = Region.R6, Outcome.COEXISTENCE
        elif inv1:
            region, predicted = Region.R5, Outcome.VIRUS1_ONLY
        elif inv2:
            region, predicted = Region.R4, Outcome.VIRUS2_ONLY
        else:
            raise InternalInconsistency(
                "neither virus can invade the other although both survive alone "
                f"(products {t1_lamSyA:.12g}, {t2_lamSxB:.12g})"
            )
    products = (t1_lamA, t2_lamB, t1_lamSyA, t2_lamSxB)
    boundary = any(abs(p - 1.0) <= BOUNDARY_BAND for p in products)
    return RegimeReport(
        p1.tau, p2.tau, lam_a, lam_b, t1_lamA, t2_lamB, t1_lamSyA, t2_lamSxB,
        region, predicted, np.asarray(x_star), np.asarray(y_star), boundary,
    )


# --------------------------------------------------------------------------
# threshold curves


@dataclass(frozen=True, eq=False)
class ThresholdCurves:
    """Survival thresholds as functions of the competitor's strength.

    ``blue_curve[k]`` is the smallest tau1 letting Virus 1 invade Virus 2's
    endemic state at ``tau2_grid[k]``; ``red_curve`` is the dual. Grid points
    where the competitor dies out alone are flagged in ``*_below_corner`` and
    carry the single-virus threshold ``1/lambda``.
    """

    tau2_grid: np.ndarray
    blue_curve: np.ndarray
    tau1_grid: np.ndarray
    red_curve: np.ndarray
    blue_below_corner: np.ndarray
    red_below_corner: np.ndarray


def _curve(grid, own: Graph, other: Graph, lam_own: float, lam_other: float, eig_tol, fp_tol):
    values, below = [], []
    for tau in grid:
        p = VirusParams.from_tau(float(tau))
        fixed = _endemic_point(p, other, lam_other, fp_tol)
        if not np.any(fixed > 0):
            values.append(1.0 / lam_own)
            below.append(True)
        else:
            values.append(1.0 / scaled_spectral(1.0 - fixed, own, eig_tol))
            below.append(False)
    return np.array(values), np.array(below)


def threshold_curves(
    a: Graph,
    b: Graph,
    tau_min: float,
    tau_max: float,
    steps: int,
    *,
    eig_tol: float = DEFAULT_TOL,
    fp_tol: float = FP_TOL,
) -> ThresholdCurves:
    """Trace both threshold curves on the uniform grid ``linspace(tau_min, tau_max, steps)``."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if not 0 < tau_min < tau_max:
        raise ValueError("need 0 < tau_min < tau_max")
    lam_a, lam_b = spectral_radius(a, eig_tol), spectral_radius(b, eig_tol)
    grid = np.linspace(tau_min, tau_max, steps)
    blue, blue_below = _curve(grid, a, b, lam_a, lam_b, eig_tol, fp_tol)
    red, red_below = _curve(grid, b, a, lam_b, lam_a, eig_tol, fp_tol)
    return ThresholdCurves(grid, blue, grid.copy(), red, blue_below, red_below)


# --------------------------------------------------------------------------
# sweeps


def outcome_class(avg_x: float, avg_y: float, tol: float = CLASS_TOL) -> Outcome:
    """Attractor class from averaged infection levels (``< tol`` counts as extinct)."""
    xpos, ypos = avg_x >= tol, avg_y >= tol
    if xpos and ypos:
        return Outcome.COEXISTENCE
    if xpos:
        return Outcome.VIRUS1_ONLY
    if ypos:
        return Outcome.VIRUS2_ONLY
    return Outcome.VIRUS_FREE


@dataclass
class SimulationOutcome:
    equilibria: EquilibriumSet
    classes: list[Outcome]
    matched: bool


@dataclass
class SweepCell:
    tau1: float
    tau2: float
    report: RegimeReport | None = None
    outcome: SimulationOutcome | None = None
    error: str | None = None

    @property
    def verified(self) -> bool | None:
        return None if self.outcome is None else self.outcome.matched


def verify_prediction(
    report: RegimeReport,
    a: Graph,
    b: Graph,
    n_seeds: int = 5,
    rng_seed: int = 0,
    tol: float = CLASS_TOL,
) -> SimulationOutcome:
    """Simulate from random starts and compare attractor classes with ``report.predicted``."""
    p1, p2 = VirusParams.from_tau(report.tau1), VirusParams.from_tau(report.tau2)
    eqs = multi_start_equilibria(p1, p2, a, b, n_seeds, rng_seed)
    classes = [outcome_class(*avg_projection(pt.state), tol) for pt in eqs.points]
    matched = bool(classes) and not eqs.errors and all(c is report.predicted for c in classes)
    return SimulationOutcome(eqs, classes, matched)


def sweep(
    a: Graph,
    b: Graph,
    tau1_grid,
    tau2_grid,
    verify: bool = False,
    rng_seed: int = 0,
    n_seeds: int = 5,
    *,
    eig_tol: float = DEFAULT_TOL,
    fp_tol: float = FP_TOL,
) -> list[SweepCell]:
    """Classify every ``(tau1, tau2)`` cell, tau1-major; optionally verify by simulation.

    Cell ``k`` (in output order) uses seed ``rng_seed + k``. Errors are stored
    on the cell instead of aborting the sweep.
    """
    tau1_grid, tau2_grid = list(tau1_grid), list(tau2_grid)
    if not tau1_grid or not tau2_grid:
        raise ValueError("grids must be nonempty")
    lam_a, lam_b = spectral_radius(a, eig_tol), spectral_radius(b, eig_tol)
    x_cache: dict[float, np.ndarray] = {}
    y_cache: dict[float, np.ndarray] = {}
    cells: list[SweepCell] = []
    for t1 in tau1_grid:
        for t2 in tau2_grid:
            cell = SweepCell(float(t1), float(t2))
            k = len(cells)
            cells.append(cell)
            try:
                p1, p2 = VirusParams.from_tau(t1), VirusParams.from_tau(t2)
                if t1 not in x_cache:
                    x_cache[t1] = _endemic_point(p1, a, lam_a, fp_tol)
                if t2 not in y_cache:
                    y_cache[t2] = _endemic_point(p2, b, lam_b, fp_tol)
                cell.report = classify(
                    p1, p2, a, b, eig_tol=eig_tol, fp_tol=fp_tol, lam_a=lam_a, lam_b=lam_b,
                    x_star=x_cache[t1], y_star=y_cache[t2],
                )
                if verify:
                    cell.outcome = verify_prediction(cell.report, a, b, n_seeds, rng_seed + k)
            except BivirusError as exc:
                cell.error = f"{type(exc).__name__}: {exc}"
    return cells


def parse_grid(spec: str) -> np.ndarray:
    """``"min:max:steps"`` -> uniform grid (``steps == 1`` gives ``[min]``)."""
    try:
        lo, hi, n = spec.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ValueError(f"grid spec must look like 'min:max:steps', got {spec!r}") from None
    if n < 1:
        raise ValueError("grid needs at least one step")
    return np.array([lo]) if n == 1 else np.linspace(lo, hi, n)
