import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from grushin.embedding import (
    Embedding,
    embed_F,
    extend_g,
    g_offset,
    grad_g,
    local_chart,
    map_H,
    pair_difference,
)
from grushin.geodesic import shooting_distance
from grushin.line import embed_line
from grushin.metric import Point
from grushin.partition import active_set, hull
from grushin.whitney import LevelRangeError, WhitneyBox

EMB = Embedding()
xs = st.floats(1e-3, 2.0).flatmap(lambda a: st.sampled_from([a, -a]))
points = st.builds(Point, xs, st.floats(-2, 2))
C3 = 130


@given(st.floats(-2, 2))
def test_restriction_to_line(y):
    v = embed_F((0.0, y), EMB)
    assert np.array_equal(v.g_part, embed_line(y, EMB.cascade))
    assert v.H_part == {} and v.dist_part == 0.0
    assert np.array_equal(extend_g((0.0, y), EMB), embed_line(y, EMB.cascade))


def test_local_chart_corner():
    np.testing.assert_array_equal(local_chart(WhitneyBox(1, 1, 1), (0.5, 0.25)), [0.5, 0.0])


@given(st.builds(WhitneyBox, st.sampled_from([1, -1]), st.integers(-4, 8), st.integers(-300, 300)),
       st.floats(0, 1), st.floats(0, 1))
def test_chart_annulus(Q, u, v):
    (x0, x1), (y0, y1) = hull(Q)
    p = Point(x0 + u * (x1 - x0), y0 + v * (y1 - y0))
    r = np.linalg.norm(local_chart(Q, p)) / Q.scale
    assert 1 / 10 <= r <= 10


def test_dimension():
    v = embed_F((0.7, 0.3), EMB)
    assert v.to_dense().size == 2 * EMB.M + 4 == EMB.dimension


@given(points)
def test_sparse_H_slots_bounded(p):
    H = map_H(p, EMB)
    assert 0 < len(H) <= C3
    assert all(1 <= c <= EMB.M for c in H)


@given(points)
def test_dist_component(p):
    assert embed_F(p, EMB).dist_part == abs(p.x)


@given(points)
def test_g_is_partition_average(p):
    s = active_set(p)
    direct = sum(w * embed_line(p.y - zo, EMB.cascade) for w, zo in zip(s.phi, -s.z_off))
    np.testing.assert_allclose(extend_g(p, EMB), direct, atol=1e-7)


@given(points, st.floats(-1, 1), st.floats(-1, 1))
def test_pair_difference_consistent(p, u, v):
    q = Point(p.x * (1 + 0.1 * u), p.y + 0.1 * v * p.x * p.x)
    if q.x == 0.0:
        return
    d = pair_difference(p, q, EMB)
    dense = embed_F(p, EMB).to_dense() - embed_F(q, EMB).to_dense()
    assert d.dist == pytest.approx(abs(abs(p.x) - abs(q.x)))
    assert d.total == pytest.approx(np.linalg.norm(dense), rel=1e-5, abs=1e-7)


def test_g_lipschitz_on_local_pairs():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(200):
        p = Point(rng.choice([-1, 1]) * 2.0 ** rng.uniform(-8, 1), rng.uniform(-2, 2))
        s = abs(p.x) * 2.0 ** rng.uniform(-6, 0)
        q = Point(p.x + s * rng.uniform(-0.5, 0.5), p.y + s * abs(p.x) * rng.uniform(-1, 1))
        d = shooting_distance(p, q).distance
        dg = np.linalg.norm(g_offset(p, p.y, EMB) - g_offset(q, p.y, EMB))
        worst = max(worst, dg / d)
    assert math.isfinite(worst) and worst <= 3 * 9  # a few times L


def test_grad_bounded_and_stable():
    rng = np.random.default_rng(12)
    for _ in range(30):
        p = Point(rng.choice([-1, 1]) * 2.0 ** rng.uniform(-8, 1), rng.uniform(-2, 2))
        a = np.array(grad_g(p, EMB, 1e-6))
        b = np.array(grad_g(p, EMB, 5e-7))
        assert np.all(a <= 3 * 9)
        assert np.all(np.abs(a - b) <= 0.05 * np.maximum(np.abs(b), 1e-9))


def test_grad_rejects_line_and_large_steps():
    with pytest.raises(ValueError):
        grad_g((0.0, 1.0), EMB)
    with pytest.raises(ValueError):
        grad_g((0.5, 1.0), EMB, eps=1.0)


def test_level_range_enforced():
    narrow = Embedding(level_range=(0, 2))
    with pytest.raises(LevelRangeError):
        embed_F((0.01, 0.0), narrow)
    with pytest.raises(LevelRangeError):
        extend_g((0.01, 0.0), narrow)


def test_to_dict_roundtrip():
    d = embed_F((0.3, -0.2), EMB).to_dict()
    assert d["dimension"] == 2 * EMB.M + 4
    assert set(d) == {"g", "H", "dist", "dimension"}
