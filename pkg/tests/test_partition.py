import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from grushin.metric import Point, dilate
from grushin.partition import (
    active_boxes,
    active_set,
    bump,
    bump_from_sets,
    hull,
    measure_constants,
    phi,
)
from grushin.whitney import SingularPointError, WhitneyBox, box_containing, star2

#: Regression constant: largest active set on the canonical sample.
C3 = 130

xs = st.floats(1e-3, 2.0).flatmap(lambda a: st.sampled_from([a, -a]))
points = st.builds(Point, xs, st.floats(-2, 2))
box_st = st.builds(WhitneyBox, st.sampled_from([1, -1]), st.integers(-4, 8), st.integers(-300, 300))


@given(points)
def test_partition_sums_to_one(p):
    assert abs(active_set(p).phi.sum() - 1.0) <= 1e-12


@given(box_st)
def test_bump_is_one_at_center(Q):
    assert bump(Q, Q.center) == 1.0


@given(box_st, st.floats(0, 1), st.floats(0, 1))
def test_bump_is_one_on_star_hull(Q, u, v):
    (x0, x1), (y0, y1) = hull(Q)
    p = Point(x0 + u * (x1 - x0), y0 + v * (y1 - y0))
    assert bump(Q, p) == pytest.approx(1.0, abs=1e-9)


def test_bump_vanishes_outside_second_hull():
    Q = WhitneyBox(1, 1, 1)
    (x0, x1), (y0, y1) = hull(Q, second=True)
    for p in [(x1 * 1.01, 0.5 * (y0 + y1)), (0.5 * (x0 + x1), y1 + 1e-6), (-0.75, 0.375)]:
        assert bump(Q, p) == 0.0


def test_bump_linear_in_decay_band():
    Q = WhitneyBox(1, 1, 1)
    (a1, b1), _ = hull(Q)
    (a2, _), _ = hull(Q, second=True)
    y = Q.center.y
    mid = 0.5 * (a1 + a2)
    assert bump(Q, (mid, y)) == pytest.approx(0.5, abs=1e-12)
    quarter = a2 + 0.25 * (a1 - a2)
    assert bump(Q, (quarter, y)) == pytest.approx(0.25, abs=1e-12)


@given(box_st, st.floats(-1, 2), st.floats(-1, 2))
def test_tabulated_bump_matches_set_hulls(Q, u, v):
    (x0, x1), (y0, y1) = hull(Q, second=True)
    p = Point(x0 + u * (x1 - x0), y0 + v * (y1 - y0))
    if p.x == 0.0:
        return
    assert bump(Q, p) == pytest.approx(bump_from_sets(Q, p), abs=1e-9)


@given(points)
def test_active_set_matches_exhaustive_bumps(p):
    Q0 = box_containing(p)
    active = active_boxes(p)
    assert all(bump(Q, p) > 0 for Q in active)
    cands = set()
    for R in star2(Q0):
        cands |= star2(R)
    outside = [Q for Q in cands if Q not in active]
    assert all(bump(Q, p) == 0.0 for Q in outside)


@given(points)
def test_phi_lower_bound_and_overlap(p):
    s = active_set(p)
    assert len(s) <= C3
    Q0 = box_containing(p)
    assert phi(Q0, p) >= 1.0 / C3


def test_phi_errors_on_singular_line():
    with pytest.raises(SingularPointError):
        phi(WhitneyBox(1, 0, 0), (0.0, 0.5))


def test_phi_zero_off_support():
    assert phi(WhitneyBox(1, 0, 0), (-0.75, 0.5)) == 0.0


@given(points, st.integers(-3, 3))
def test_partition_dilation_equivariant(p, steps):
    q = dilate(p, 2.0 ** steps)
    a = {(Q.side, Q.n - steps, Q.k): w for Q, w in zip(active_set(p).boxes(), active_set(p).phi)}
    b = {(Q.side, Q.n, Q.k): w for Q, w in zip(active_set(q).boxes(), active_set(q).phi)}
    assert a.keys() == b.keys()
    assert all(a[key] == pytest.approx(b[key], abs=1e-12) for key in a)


def test_measure_constants_lipschitz_finite():
    rng = np.random.default_rng(5)
    pts, close = [], []
    for _ in range(60):
        p = Point(rng.choice([-1, 1]) * 2.0 ** rng.uniform(-6, 1), rng.uniform(-2, 2))
        h = abs(p.x) * 1e-3
        pts.append(p)
        close.append((p, Point(p.x + h * rng.uniform(-1, 1), p.y + h * abs(p.x) * rng.uniform(-1, 1))))
    c = measure_constants(pts, close)
    assert 0 < c.C2 < math.inf
    assert c.C1 == c.C3 <= C3


def test_active_set_exact_at_large_index():
    # relative coordinates keep the evaluation exact far from the origin
    p = Point(2.0 ** -20, 1.0 + 3 * 4.0 ** -21)
    assert abs(active_set(p).phi.sum() - 1.0) <= 1e-12
