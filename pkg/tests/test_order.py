import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bivirus.dynamics import make_rng, sample_interior_state
from bivirus.errors import DimensionMismatch, StateOutOfD
from bivirus.graph import complete_graph, cycle_graph, star_graph
from bivirus.order import (
    Ordering,
    kamke_check,
    monotonicity_trial,
    random_ordered_pair,
    satisfies,
    se_compare,
    se_margin,
)
from bivirus.spectral import JacobianMatrix, jacobian_bivirus
from bivirus.state import BiVirusState, VirusParams

from conftest import random_connected_graph

N = 4
unit = arrays(np.float64, N, elements=st.floats(0, 0.5))


def st_state():
    return st.builds(BiVirusState, unit, unit)


def leq(a, b):
    return satisfies(se_compare(a, b), Ordering.LEQ)


@pytest.mark.parametrize(
    "s1, s2, rel",
    [
        (BiVirusState([0.1, 0.1], [0.5, 0.5]), BiVirusState([0.1, 0.1], [0.5, 0.5]), Ordering.EQUAL),
        (BiVirusState([0.1, 0.1], [0.5, 0.5]), BiVirusState([0.2, 0.2], [0.4, 0.4]), Ordering.LL),
        (BiVirusState([0.1, 0.1], [0.5, 0.5]), BiVirusState([0.1, 0.2], [0.5, 0.4]), Ordering.LT),
        (BiVirusState([0.1, 0.1], [0.5, 0.5]), BiVirusState([0.2, 0.0], [0.4, 0.4]), Ordering.INCOMPARABLE),
        (BiVirusState([0.1, 0.1], [0.5, 0.5]), BiVirusState([0.2, 0.2], [0.5, 0.6]), Ordering.INCOMPARABLE),
    ],
)
def test_se_compare_examples(s1, s2, rel):
    assert se_compare(s1, s2) is rel


def test_strictness_margin():
    s1 = BiVirusState([0.1], [0.5])
    s2 = BiVirusState([0.1 + 1e-13], [0.5 - 1e-13])
    assert se_compare(s1, s2) is Ordering.LT
    assert se_compare(s1, s2, margin=1e-14) is Ordering.LL


def test_slack_gives_leq():
    s1 = BiVirusState([0.1], [0.5])
    s2 = BiVirusState([0.1 - 1e-10], [0.4])
    assert se_compare(s1, s2) is Ordering.INCOMPARABLE
    assert se_compare(s1, s2, slack=1e-9) is Ordering.LEQ


def test_compare_dimension_check():
    with pytest.raises(DimensionMismatch):
        se_compare(BiVirusState.zeros(2), BiVirusState.zeros(3))


def test_implication_chain():
    assert satisfies(Ordering.LL, Ordering.LT)
    assert satisfies(Ordering.LT, Ordering.LEQ)
    assert satisfies(Ordering.EQUAL, Ordering.LEQ)
    assert not satisfies(Ordering.LT, Ordering.LL)
    assert not satisfies(Ordering.INCOMPARABLE, Ordering.LEQ)


@given(st_state())
def test_reflexive(a):
    assert se_compare(a, a) is Ordering.EQUAL


@given(st_state(), st_state())
def test_antisymmetric(a, b):
    if leq(a, b) and leq(b, a):
        assert a == b


@st.composite
def st_above(draw, s):
    """A state southeast-above ``s``."""
    dx = draw(arrays(np.float64, N, elements=st.floats(0, 0.25)))
    dy = draw(arrays(np.float64, N, elements=st.floats(0, 1)))
    return BiVirusState(s.x + dx, s.y * (1 - dy))


@st.composite
def st_chain(draw):
    a = draw(st_state())
    b = draw(st_above(a))
    return a, b, draw(st_above(b))


@given(st_chain())
def test_transitive(chain):
    a, b, c = chain
    assert leq(a, b) and leq(b, c)
    assert leq(a, c)


@given(st_state(), st_state())
def test_margin_sign_matches_strict_order(a, b):
    rel = se_compare(a, b, margin=0.0)
    assert (se_margin(a, b) > 0) == (rel is Ordering.LL)


@given(st_state(), st_state())
def test_reverse_relation(a, b):
    assume(not a == b)
    if se_compare(a, b) is Ordering.LL:
        assert se_compare(b, a) is Ordering.INCOMPARABLE


# --------------------------------------------------------------------------
# Kamke sign structure


def test_kamke_on_random_states():
    rng = np.random.default_rng(2)
    a, b = random_connected_graph(rng, 10), random_connected_graph(rng, 10, weighted=True)
    p1, p2 = VirusParams(1.7, 0.6), VirusParams(0.9, 1.4)
    for _ in range(300):
        s = sample_interior_state(rng, 10)
        assert kamke_check(jacobian_bivirus(s, p1, p2, a, b))


def test_kamke_detects_violation():
    n = 2
    m = np.zeros((4, 4))
    m[0, 2] = 0.5  # positive coupling from y to x breaks the southeast pattern
    assert not kamke_check(JacobianMatrix(m, n))
    m = np.zeros((4, 4))
    m[0, 1] = -0.1
    assert not kamke_check(JacobianMatrix(m, n))
    assert kamke_check(JacobianMatrix(-np.eye(4), n))


# --------------------------------------------------------------------------
# trials


def test_random_ordered_pair_is_ordered():
    rng = make_rng(0)
    kinds = set()
    for _ in range(100):
        s1, s2 = random_ordered_pair(rng, 6)
        rel = se_compare(s1, s2)
        assert rel in (Ordering.LT, Ordering.LL)
        kinds.add(rel)
        for s in (s1, s2):
            assert np.all(s.x > 0) and np.all(s.y > 0) and np.all(s.x + s.y < 1)
    assert kinds == {Ordering.LT, Ordering.LL}


@pytest.mark.parametrize("seed", range(5))
def test_monotonicity_trial_passes(seed):
    rng = make_rng(seed)
    a, b = star_graph(7), cycle_graph(7)
    p1, p2 = VirusParams(1.2, 1.0), VirusParams(0.9, 0.8)
    s1, s2 = random_ordered_pair(rng, 7)
    res = monotonicity_trial(s1, s2, p1, p2, a, b, np.linspace(0.25, 5, 20))
    assert res.passed and res.strong_required
    assert res.min_margin > 1e-12
    assert res.times[0] == 0.0 and len(res.relations) == 21


def test_trial_on_boundary_pair_is_weak():
    # y = 0 on both: not interior, so only the weak order is required
    a = complete_graph(4)
    s1 = BiVirusState(np.full(4, 0.1), np.zeros(4))
    s2 = BiVirusState(np.full(4, 0.3), np.zeros(4))
    res = monotonicity_trial(s1, s2, VirusParams(1, 1), VirusParams(1, 1), a, a, [1.0, 2.0])
    assert res.passed and not res.strong_required


def test_trial_rejects_unordered_and_outside():
    a = complete_graph(2)
    p = VirusParams(1, 1)
    with pytest.raises(ValueError):
        monotonicity_trial(BiVirusState([0.2, 0.2], [0.1, 0.1]), BiVirusState([0.1, 0.3], [0.1, 0.1]), p, p, a, a, [1.0])
    with pytest.raises(StateOutOfD):
        monotonicity_trial(BiVirusState([-0.1, 0.2], [0.1, 0.1]), BiVirusState([0.1, 0.3], [0.1, 0.1]), p, p, a, a, [1.0])


def test_equal_pair_stays_equal():
    a = cycle_graph(5)
    s = sample_interior_state(make_rng(3), 5)
    res = monotonicity_trial(s, s, VirusParams(1, 1), VirusParams(1, 1), a, a, [0.5, 1.0])
    assert res.passed and not res.strong_required
    assert all(r is Ordering.EQUAL for r in res.relations)
