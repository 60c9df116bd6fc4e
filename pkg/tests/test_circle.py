import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqlift import circle
from freqlift.circle import CirclePoint, circ_dist, exact, lift_set, midpoint_short_arc, point, scale
from freqlift.errors import AntipodalInput

from oracles import circle_dist_float


def test_dist_wraparound():
    assert circ_dist(point(0.75), point(0.0)) == pytest.approx(0.25)


def test_dist_identity():
    for x in (0.0, 0.3, 0.9999, Fraction(2, 7)):
        assert circ_dist(point(x), point(x)) == 0


def test_dist_exact_matches_float_scan():
    d = circ_dist(exact(2, 7), exact(5, 7))
    assert d == Fraction(3, 7)
    assert float(d) == pytest.approx(circle_dist_float(2 / 7, 5 / 7), abs=1e-15)


def test_scale_integer_multiple():
    assert scale(5, point(0.2)).as_float() == pytest.approx(0.0)


def test_scale_exact():
    assert scale(3, exact(2, 7)) == exact(6, 7)


def test_scale_negation():
    assert scale(-1, point(0.3)).as_float() == pytest.approx(0.7)


def test_lift_set_roots_of_unity():
    assert [b.as_float() for b in lift_set(point(0.0), 2)] == [0.0, 0.5]


def test_lift_set_exact_and_inverts_scale():
    lifts = lift_set(exact(3, 5), 3)
    assert lifts == [exact(1, 5), exact(8, 15), exact(13, 15)]
    for b in lifts:
        assert scale(3, b) == exact(3, 5)


def test_lift_set_identity():
    a = point(0.371)
    assert lift_set(a, 1) == [a]


def test_midpoint_crossing_zero():
    assert midpoint_short_arc(point(0.1), point(0.9)).as_float() == pytest.approx(0.0)


def test_midpoint_interior():
    assert midpoint_short_arc(point(0.2), point(0.4)).as_float() == pytest.approx(0.3)


def test_midpoint_exact_equidistant():
    m = midpoint_short_arc(exact(1, 8), exact(3, 8))
    assert m == exact(1, 4)
    assert circ_dist(m, exact(1, 8)) == circ_dist(m, exact(3, 8))


def test_midpoint_antipodal_refused():
    with pytest.raises(AntipodalInput):
        midpoint_short_arc(exact(0, 1), exact(1, 2))
    with pytest.raises(AntipodalInput):
        midpoint_short_arc(point(0.25), point(0.75))


def test_triangle_inequality_bulk():
    rng = random.Random(7)
    for _ in range(100_000):
        a, b, c = (point(rng.random()) for _ in range(3))
        assert circ_dist(a, c) <= circ_dist(a, b) + circ_dist(b, c) + 1e-15


@given(st.integers(0, 10**6), st.integers(1, 10**3), st.integers(2, 97))
@settings(max_examples=300, deadline=None)
def test_lift_set_property(num, den, p):
    a = CirclePoint(Fraction(num, den))
    lifts = lift_set(a, p)
    assert len(lifts) == p
    for b in lifts:
        assert scale(p, b) == a
    for u, v in zip(lifts, lifts[1:]):
        assert (v.value - u.value) % 1 == Fraction(1, p)


@given(st.fractions(min_value=0, max_value=1, max_denominator=10**6),
       st.fractions(min_value=0, max_value=1, max_denominator=10**6))
@settings(max_examples=300, deadline=None)
def test_exact_and_float_modes_agree(fa, fb):
    a_ex, b_ex = CirclePoint(fa), CirclePoint(fb)
    a_fl, b_fl = a_ex.to_float_point(), b_ex.to_float_point()
    assert abs(float(circ_dist(a_ex, b_ex)) - circ_dist(a_fl, b_fl)) < 1e-12


def test_midpoint_equidistance_float_random():
    rng = random.Random(41)
    for _ in range(2000):
        a, b = point(rng.random()), point(rng.random())
        if abs(float(circ_dist(a, b)) - 0.5) < 1e-9:
            continue
        m = midpoint_short_arc(a, b)
        assert circ_dist(m, a) == pytest.approx(circ_dist(m, b), abs=1e-15)
        assert circ_dist(m, a) == pytest.approx(float(circ_dist(a, b)) / 2, abs=1e-15)


def test_mixed_mode_coerces_to_float():
    d = circ_dist(exact(1, 3), point(0.5))
    assert isinstance(d, float)


def test_serialization_round_trip():
    pts = [exact(3, 7), exact(0, 1), point(0.12345678901234567), point(0.9)]
    for a in pts:
        back = circle.decode(circle.encode(a))
        assert back == a
        assert back.is_exact == a.is_exact
    assert circle.encode(exact(3, 7)) == "3/7"


def test_float_normalization_guard():
    assert CirclePoint(-1e-20).value == 0.0
    assert CirclePoint(1.0).value == 0.0
    assert 0.0 <= CirclePoint(-0.25).value < 1.0
