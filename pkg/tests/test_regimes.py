import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bivirus.errors import InternalInconsistency
from bivirus.graph import complete_graph, cycle_graph, star_graph
from bivirus.order import Ordering, satisfies, se_compare
from bivirus.regimes import (
    Outcome,
    Region,
    classify,
    outcome_class,
    parse_grid,
    swap_outcome,
    swap_region,
    sweep,
    threshold_curves,
)
from bivirus.sis import sis_fixed_point
from bivirus.spectral import scaled_spectral, spectral_radius
from bivirus.state import BiVirusState, VirusParams

from conftest import random_connected_graph

K3 = complete_graph(3)
STAR, CYCLE = star_graph(10), cycle_graph(10)
# a coexistence point for star (Virus 1) vs cycle (Virus 2), found by grid search
COEX = (1.34, 1.5)


def tau_pair(t1, t2):
    return VirusParams.from_tau(t1), VirusParams.from_tau(t2)


@pytest.mark.parametrize(
    "t1, t2, region, outcome",
    [
        (0.4, 0.3, Region.R1, Outcome.VIRUS_FREE),
        (1.0, 0.75, Region.R5, Outcome.VIRUS1_ONLY),
        (1.0, 0.4, Region.R2, Outcome.VIRUS1_ONLY),
        (0.3, 1.0, Region.R3, Outcome.VIRUS2_ONLY),
        (0.75, 1.0, Region.R4, Outcome.VIRUS2_ONLY),
    ],
)
def test_classify_k3(t1, t2, region, outcome):
    r = classify(*tau_pair(t1, t2), K3, K3)
    assert r.region is region and r.predicted is outcome


def test_classify_k3_products_closed_form():
    r = classify(*tau_pair(1.0, 0.75), K3, K3)
    assert r.t1_lamSyA == pytest.approx(4 / 3, abs=1e-9)
    assert r.t2_lamSxB == pytest.approx(3 / 4, abs=1e-9)
    assert not r.boundary


def test_classify_star_cycle_coexistence():
    r = classify(*tau_pair(*COEX), STAR, CYCLE)
    assert r.region is Region.R6 and r.predicted is Outcome.COEXISTENCE
    # independent oracle for the invasion products
    y_star = sis_fixed_point(VirusParams.from_tau(COEX[1]), CYCLE).x_star
    x_star = sis_fixed_point(VirusParams.from_tau(COEX[0]), STAR).x_star
    assert r.t1_lamSyA == pytest.approx(COEX[0] * scaled_spectral(1 - y_star, STAR), abs=1e-9)
    assert r.t2_lamSxB == pytest.approx(COEX[1] * scaled_spectral(1 - x_star, CYCLE), abs=1e-9)
    assert min(r.t1_lamSyA, r.t2_lamSxB) > 1.05


def test_products_copy_when_competitor_dies():
    r = classify(*tau_pair(1.0, 0.4), K3, K3)
    assert r.t1_lamSyA == r.t1_lamA and r.t2_lamSxB == r.t2_lamB
    assert not r.y_star.any()


def test_boundary_flag():
    r = classify(*tau_pair(0.5, 0.3), K3, K3)
    assert r.region is Region.R1 and r.boundary


def test_same_graph_equal_strength_is_degenerate():
    # both invasion products equal 1: neither strict winner nor coexistence
    with pytest.raises(InternalInconsistency):
        classify(*tau_pair(1.0, 1.0), K3, K3)


def test_report_to_dict():
    d = classify(*tau_pair(1.0, 0.75), K3, K3).to_dict()
    assert d["region"] == "R5" and d["predicted"] == "Virus1Only"
    assert d["x_star"] == pytest.approx([0.5] * 3)


def test_region_invariants_random():
    rng = np.random.default_rng(8)
    a, b = random_connected_graph(rng, 9), random_connected_graph(rng, 9)
    for t1 in np.linspace(0.05, 1.2, 7):
        for t2 in np.linspace(0.05, 1.2, 7):
            try:
                r = classify(*tau_pair(t1, t2), a, b)
            except InternalInconsistency:
                continue
            assert (r.region is Region.R1) == (r.t1_lamA <= 1 + 1e-9 and r.t2_lamB <= 1 + 1e-9)
            assert (r.region is Region.R1) == (r.predicted is Outcome.VIRUS_FREE)
            assert (r.region is Region.R6) == (r.t1_lamSyA > 1 and r.t2_lamSxB > 1 and r.t1_lamA > 1 and r.t2_lamB > 1)
            assert (r.region is Region.R6) == (r.predicted is Outcome.COEXISTENCE)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t1=st.floats(0.05, 1.5), t2=st.floats(0.05, 1.5))
def test_swap_symmetry(seed, t1, t2):
    rng = np.random.default_rng(seed)
    a, b = random_connected_graph(rng, 6), random_connected_graph(rng, 6)
    p1, p2 = tau_pair(t1, t2)
    try:
        fwd = classify(p1, p2, a, b)
    except InternalInconsistency:
        return
    rev = classify(p2, p1, b, a)
    assert rev.region is swap_region(fwd.region)
    assert rev.predicted is swap_outcome(fwd.predicted)


def test_swap_tables_are_involutions():
    for r in Region:
        assert swap_region(swap_region(r)) is r
    for o in Outcome:
        assert swap_outcome(swap_outcome(o)) is o


# --------------------------------------------------------------------------
# threshold curves


def test_k3_blue_curve_is_diagonal():
    c = threshold_curves(K3, K3, 0.6, 2.0, 8)
    np.testing.assert_allclose(c.blue_curve, c.tau2_grid, atol=1e-9)
    np.testing.assert_allclose(c.red_curve, c.tau1_grid, atol=1e-9)
    assert not c.blue_below_corner.any()


def test_curves_meet_at_corner():
    lam_a, lam_b = spectral_radius(STAR), spectral_radius(CYCLE)
    c = threshold_curves(STAR, CYCLE, 1 / lam_b, 1.5, 6)
    assert c.blue_below_corner[0]
    assert c.blue_curve[0] == pytest.approx(1 / lam_a, abs=1e-12)
    # just above the corner the curve approaches the same point linearly
    gaps = [
        threshold_curves(STAR, CYCLE, (1 + eps) / lam_b, 1.5, 2).blue_curve[0] - 1 / lam_a
        for eps in (1e-1, 1e-2, 1e-3)
    ]
    assert all(g > 0 for g in gaps)
    assert gaps[2] < 1e-3
    assert gaps[1] / gaps[0] == pytest.approx(0.1, rel=1e-3)
    assert gaps[2] / gaps[1] == pytest.approx(0.1, rel=1e-3)


def test_curves_nondecreasing():
    c = threshold_curves(STAR, CYCLE, 0.2, 2.5, 15)
    assert np.all(np.diff(c.blue_curve) >= -1e-12)
    assert np.all(np.diff(c.red_curve) >= -1e-12)


def test_curve_argument_checks():
    with pytest.raises(ValueError):
        threshold_curves(K3, K3, 0.5, 1.0, 1)
    with pytest.raises(ValueError):
        threshold_curves(K3, K3, 1.0, 0.5, 4)


# --------------------------------------------------------------------------
# sweeps


@pytest.mark.parametrize(
    "ax, ay, outcome",
    [
        (0.0, 0.0, Outcome.VIRUS_FREE),
        (0.3, 5e-5, Outcome.VIRUS1_ONLY),
        (0.0, 0.2, Outcome.VIRUS2_ONLY),
        (0.1, 0.1, Outcome.COEXISTENCE),
    ],
)
def test_outcome_class(ax, ay, outcome):
    assert outcome_class(ax, ay) is outcome


def test_parse_grid():
    np.testing.assert_allclose(parse_grid("0.2:1.5:3"), [0.2, 0.85, 1.5])
    assert list(parse_grid("0.7:2:1")) == [0.7]
    for bad in ("1:2", "a:b:c", "1:2:0"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_sweep_single_r1_cell():
    cells = sweep(K3, K3, [0.3], [0.2], verify=True, rng_seed=0)
    assert len(cells) == 1
    c = cells[0]
    assert c.report.predicted is Outcome.VIRUS_FREE and c.verified


def test_sweep_order_is_tau1_major():
    cells = sweep(K3, K3, [0.2, 0.3], [0.1, 0.15, 0.2])
    assert [(c.tau1, c.tau2) for c in cells] == [
        (t1, t2) for t1 in (0.2, 0.3) for t2 in (0.1, 0.15, 0.2)
    ]
    assert all(c.verified is None for c in cells)


def test_sweep_k3_has_no_coexistence():
    cells = sweep(K3, K3, np.linspace(0.2, 1.5, 10), np.linspace(0.2, 1.5, 10))
    for c in cells:
        if c.error:
            # only the tau1 == tau2 line, where both invasion products are exactly 1
            assert c.tau1 == c.tau2 and "InternalInconsistency" in c.error
        else:
            assert c.report.region is not Region.R6


def test_sweep_errors_are_collected():
    cells = sweep(K3, K3, [1.0], [0.75, 1.0])
    assert cells[0].error is None and cells[1].error is not None


def test_sweep_finds_verified_coexistence():
    cells = sweep(STAR, CYCLE, [0.9, COEX[0]], [COEX[1]], verify=True, rng_seed=4)
    coex = [c for c in cells if c.report.region is Region.R6]
    assert coex and all(c.verified for c in coex)
    a_x = sis_fixed_point(VirusParams.from_tau(COEX[0]), STAR).x_star
    b_y = sis_fixed_point(VirusParams.from_tau(COEX[1]), CYCLE).x_star
    lo, hi = BiVirusState(np.zeros(10), b_y), BiVirusState(a_x, np.zeros(10))
    for c in coex:
        for pt in c.outcome.equilibria.points:
            assert satisfies(se_compare(lo, pt.state), Ordering.LEQ)
            assert satisfies(se_compare(pt.state, hi), Ordering.LEQ)
