import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from grushin.metric import (
    KAPPA,
    DistanceInterval,
    MetricConstants,
    Point,
    curve_length,
    dilate,
    dist_to_line,
    distance_bounds,
    segment_length,
    singular_distance,
)

coords = st.floats(-4.0, 4.0, allow_nan=False)
points = st.builds(Point, coords, coords)
lams = st.floats(0.125, 8.0)


@pytest.mark.parametrize("p, lam, expected", [
    ((1, 1), 2, (2, 4)),
    ((3, -5), 1, (3, -5)),
    ((2, 4), 0.5, (1, 1)),
])
def test_dilate_examples(p, lam, expected):
    assert dilate(p, lam) == Point(*expected)


@pytest.mark.parametrize("lam", [0.0, -1.0])
def test_dilate_rejects_nonpositive(lam):
    with pytest.raises(ValueError):
        dilate((1, 1), lam)


def test_point_rejects_nonfinite():
    with pytest.raises(ValueError):
        Point(math.nan, 0.0)


@pytest.mark.parametrize("y1, y2, expected", [
    (0, 0, 0.0),
    (0, 1, KAPPA),
    (0, 4, 2 * KAPPA),
    (3, -1, 2 * KAPPA),
])
def test_singular_distance(y1, y2, expected):
    assert singular_distance(y1, y2) == pytest.approx(expected, rel=1e-15)


def test_kappa_value():
    assert KAPPA == pytest.approx(2.5066282746310002, rel=1e-15)


def test_metric_constants_bracket():
    with pytest.raises(ValueError):
        MetricConstants(kappa=5.0)


@pytest.mark.parametrize("p, q, lo, hi", [
    ((1, 0), (1, 1), 1 / (2 * math.sqrt(5)), 4.0),
    ((1, 0), (3, 0), 1.0, 8.0),
    ((0.5, 0.5), (0.5, 0.5), 0.0, 0.0),
])
def test_distance_bounds_examples(p, q, lo, hi):
    b = distance_bounds(p, q)
    assert b.lo == pytest.approx(lo, rel=1e-12)
    assert b.hi == pytest.approx(hi, rel=1e-12)


@given(points, points)
def test_distance_bounds_symmetric_and_ordered(p, q):
    a, b = distance_bounds(p, q), distance_bounds(q, p)
    assert a.lo == pytest.approx(b.lo) and a.hi == pytest.approx(b.hi)
    assert 0.0 <= a.lo <= a.hi


@given(points, points, lams)
def test_distance_bounds_homogeneous(p, q, lam):
    a = distance_bounds(p, q)
    b = distance_bounds(dilate(p, lam), dilate(q, lam))
    assert b.lo == pytest.approx(lam * a.lo, rel=1e-9, abs=1e-300)
    assert b.hi == pytest.approx(lam * a.hi, rel=1e-9, abs=1e-300)


@given(points, points)
def test_horizontal_separation_is_a_lower_bound(p, q):
    assert distance_bounds(p, q).hi >= abs(p.x - q.x) * (1 - 1e-12)


def test_interval_validation():
    with pytest.raises(ValueError):
        DistanceInterval(2.0, 1.0)
    assert 1.5 in DistanceInterval(1.0, 2.0)


@pytest.mark.parametrize("p, expected", [((0.5, 7), 0.5), ((0, 3), 0.0), ((-2, 0), 2.0)])
def test_dist_to_line(p, expected):
    assert dist_to_line(p) == expected


@pytest.mark.parametrize("vertices, expected", [
    ([(1, 0), (3, 0)], 2.0),
    ([(-1, 0), (1, 0)], 2.0),
    ([(0, 0), (0, 1)], math.inf),
])
def test_curve_length_examples(vertices, expected):
    assert curve_length(vertices) == expected


def test_curve_length_needs_two_vertices():
    with pytest.raises(ValueError):
        curve_length([(1, 0)])


def _quad_length(p, q):
    (x1, y1), (x2, y2) = p, q

    def speed(t):
        x = x1 + t * (x2 - x1)
        return math.sqrt((x2 - x1) ** 2 + ((y2 - y1) / x) ** 2)

    return quad(speed, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12)[0]


@pytest.mark.parametrize("p, q", [
    ((1, 0), (2, 1)),
    ((1, 0), (1, 1)),
    ((0.3, -0.2), (1.7, 0.9)),
    ((-2, 1), (-0.5, -1)),
])
def test_segment_length_matches_quadrature(p, q):
    assert segment_length(p, q) == pytest.approx(_quad_length(p, q), rel=1e-8)


def test_segment_crossing_line_with_rise_is_infinite():
    assert segment_length((-1, 0), (1, 1)) == math.inf


@given(st.floats(0.1, 3.0), st.floats(-2, 2), st.floats(0.1, 3.0), st.floats(-2, 2))
def test_segment_length_dominates_lower_bound(x1, y1, x2, y2):
    p, q = Point(x1, y1), Point(x2, y2)
    assert segment_length(p, q) >= distance_bounds(p, q).lo * (1 - 1e-9)


def test_curve_length_additive():
    a, b, c = (1, 0), (1.5, 0.4), (2, 1)
    assert curve_length([a, b, c]) == pytest.approx(segment_length(a, b) + segment_length(b, c), rel=1e-9)


def test_vectorized_points_roundtrip():
    p = Point(*np.array([0.25, -1.0]))
    assert tuple(p) == (0.25, -1.0)
