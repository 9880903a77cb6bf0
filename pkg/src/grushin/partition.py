"""Lipschitz partition of unity subordinate to the Whitney stars.

Each box ``Q`` carries a trapezoid bump: 1 on the rectangular hull of its
star, decaying linearly (separately in ``x`` and in ``y``) to 0 on the boundary
of the hull of its second star.  Normalizing the bumps gives ``phi_Q``.

Hull shapes depend only on ``k mod 64`` (and scale with the level), so they
are tabulated once from the exact set-valued stars.  All evaluation happens in
coordinates relative to the point's own box, which keeps it exact even where
box indices exceed double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .metric import Point, _as_point, distance_bounds
from .whitney import LEVEL_RANGE, WhitneyBox, box_containing, star, star2

__all__ = [
    "PartitionConstants",
    "hull",
    "bump",
    "bump_from_sets",
    "phi",
    "active_boxes",
    "ActiveSet",
    "active_set",
    "active_sets",
    "measure_constants",
]

_RES = 64
_X1 = (0.5, 4.0)  # star hull in units of 2^-n
_X2 = (0.25, 8.0)  # second-star hull
_DLEVELS = (-2, -1, 0, 1, 2)


@lru_cache(maxsize=1)
def _hull_table() -> np.ndarray:
    """Rows ``(lo1, hi1, lo2, hi2)``: y-hulls of star and second star in box-height units, relative to ``k``."""
    rows = []
    for r in range(_RES):
        Q = WhitneyBox(1, 0, r + _RES)
        row = []
        for members in (star(Q), star2(Q)):
            lo = min(R.y_range[0] for R in members)
            hi = max(R.y_range[1] for R in members)
            row += [lo - Q.k, hi - Q.k]
        rows.append(row)
    table = np.array(rows, dtype=float)
    table.setflags(write=False)
    return table


def _j_window(d: int) -> np.ndarray:
    t = _hull_table()
    lo = int(math.floor(-t[:, 3].max())) - 1
    hi = int(math.ceil(4.0 ** max(d, 0) - t[:, 2].min())) + 1
    return np.arange(lo, hi + 1)


_J = {d: _j_window(d) for d in _DLEVELS}


def _rel(y: float, m: int, k: int) -> float:
    """``y * 4^m - k`` evaluated exactly for arbitrary integer ``k``."""
    F = math.ldexp(y, 2 * m)
    fl = math.floor(F)
    return float(int(fl) - k) + (F - fl)


def _ramp(t, lo2, lo1, hi1, hi2):
    up = (t - lo2) / (lo1 - lo2)
    down = (hi2 - t) / (hi2 - hi1)
    return np.clip(np.minimum(up, down), 0.0, 1.0)


def hull(Q: WhitneyBox, second: bool = False) -> tuple[tuple[float, float], tuple[float, float]]:
    """Closed rectangular hull of ``star(Q)`` (or of ``star2(Q)``) as ``((x0, x1), (y0, y1))``."""
    lo1, hi1, lo2, hi2 = _hull_table()[Q.k % _RES]
    xs = _X2 if second else _X1
    lo, hi = (lo2, hi2) if second else (lo1, hi1)
    s, h = Q.scale, Q.height
    x0, x1 = xs[0] * s, xs[1] * s
    if Q.side < 0:
        x0, x1 = -x1, -x0
    return (x0, x1), ((Q.k + lo) * h, (Q.k + hi) * h)


def bump(Q: WhitneyBox, p) -> float:
    """Trapezoid bump of ``Q`` at ``p``, in ``[0, 1]``."""
    p = _as_point(p)
    if p.x == 0.0 or (p.x > 0) != (Q.side > 0):
        return 0.0
    xi = math.ldexp(abs(p.x), Q.n)
    t = _rel(p.y, Q.n, Q.k)
    lo1, hi1, lo2, hi2 = _hull_table()[Q.k % _RES]
    bx = _ramp(xi, _X2[0], _X1[0], _X1[1], _X2[1])
    by = _ramp(t, lo2, lo1, hi1, hi2)
    return float(min(bx, by))


def bump_from_sets(Q: WhitneyBox, p) -> float:
    """Reference bump built from the hulls of the explicit star sets."""
    p = _as_point(p)
    if p.x == 0.0 or (p.x > 0) != (Q.side > 0):
        return 0.0

    def box_hull(members):
        xs = [abs(v) for R in members for v in R.x_range]
        ys = [v for R in members for v in R.y_range]
        return min(xs), max(xs), min(ys), max(ys)

    a1, b1, c1, d1 = box_hull(star(Q))
    a2, b2, c2, d2 = box_hull(star2(Q))
    bx = _ramp(abs(p.x), a2, a1, b1, b2)
    by = _ramp(p.y, c2, c1, d1, d2)
    return float(min(bx, by))


@dataclass(frozen=True)
class ActiveSet:
    """Boxes with a positive bump at one point, in relative form.

    Row ``i`` describes the box ``(side, n + dn[i], base[dn[i]] + j[i])``:
    ``phi`` its normalized weight, ``v`` the point's height above the box
    bottom in box-height units, ``z_off`` the box's ``z_Q`` ordinate minus the
    point's ordinate and ``raw`` the unnormalized bump.
    """

    point: Point
    side: int
    n: int
    base: dict
    dn: np.ndarray
    j: np.ndarray
    phi: np.ndarray
    v: np.ndarray
    z_off: np.ndarray
    raw: np.ndarray

    def __len__(self) -> int:
        return int(self.phi.size)

    def boxes(self) -> list[WhitneyBox]:
        return [WhitneyBox(self.side, self.n + int(d), self.base[int(d)] + int(jj))
                for d, jj in zip(self.dn, self.j)]

    def residues(self, modulus: int) -> np.ndarray:
        """``k mod modulus`` for every active box, exact."""
        b = np.array([self.base[int(d)] % modulus for d in self.dn], dtype=np.int64)
        return (b + self.j) % modulus


def _base_index(k: int, d: int) -> int:
    return k * 4 ** d if d >= 0 else k // 4 ** (-d)


def active_set(p, level_range: tuple[int, int] = LEVEL_RANGE) -> ActiveSet:
    """All boxes whose bump is positive at ``p``, with their ``phi`` weights."""
    p = _as_point(p)
    Q0 = box_containing(p, level_range)
    n, k = Q0.n, Q0.k
    table = _hull_table()
    dn_parts, j_parts, b_parts, t_parts = [], [], [], []
    base = {}
    v0 = _rel(p.y, n, k)
    for d in _DLEVELS:
        m = n + d
        b = _base_index(k, d)
        base[d] = b
        if d >= 0:
            t = v0 * 4.0 ** d
        else:
            q = 4 ** (-d)
            t = ((k - b * q) + v0) / q
        js = _J[d]
        rows = table[(b % _RES + js) % _RES]
        rel = t - js
        xi = math.ldexp(abs(p.x), m)
        bx = _ramp(xi, _X2[0], _X1[0], _X1[1], _X2[1])
        by = _ramp(rel, rows[:, 2], rows[:, 0], rows[:, 1], rows[:, 3])
        w = np.minimum(bx, by)
        live = w > 0.0
        dn_parts.append(np.full(int(live.sum()), d))
        j_parts.append(js[live])
        b_parts.append(w[live])
        t_parts.append(rel[live])
    dn = np.concatenate(dn_parts)
    j = np.concatenate(j_parts)
    w = np.concatenate(b_parts)
    v = np.concatenate(t_parts)
    heights = np.ldexp(1.0, -2 * (n + dn))
    z_off = (0.5 - v) * heights
    return ActiveSet(p, Q0.side, n, base, dn, j, w / w.sum(), v, z_off, w)


def active_sets(points, level_range: tuple[int, int] = LEVEL_RANGE) -> list[ActiveSet]:
    return [active_set(p, level_range) for p in points]


def active_boxes(p, level_range: tuple[int, int] = LEVEL_RANGE) -> frozenset[WhitneyBox]:
    return frozenset(active_set(p, level_range).boxes())


def phi(Q: WhitneyBox, p, level_range: tuple[int, int] = LEVEL_RANGE) -> float:
    """Normalized weight ``phi_Q(p) = bump(Q, p) / sum_R bump(R, p)``."""
    p = _as_point(p)
    b = bump(Q, p)
    if b == 0.0:
        if p.x == 0.0:
            box_containing(p, level_range)  # raises the singular-point error
        return 0.0
    return b / float(active_set(p, level_range).raw.sum())


@dataclass(frozen=True)
class PartitionConstants:
    C1: float
    C2: float
    C3: int

    def to_dict(self) -> dict:
        return {"C1": self.C1, "C2": self.C2, "C3": self.C3}


def measure_constants(points, pairs=None) -> PartitionConstants:
    """Measure ``C3`` (largest active set) and ``C2`` (Lipschitz factor); ``C1 = C3``.

    ``C2`` is the largest ``|phi_Q(p) - phi_Q(q)| scale(Q) / d_hi(p, q)`` over
    the supplied close pairs and every box active at either end.
    """
    c3 = max(len(active_set(p)) for p in points)
    c2 = 0.0
    for p, q in pairs or ():
        sp, sq = active_set(p), active_set(q)
        wp = dict(zip(sp.boxes(), sp.phi))
        wq = dict(zip(sq.boxes(), sq.phi))
        hi = distance_bounds(p, q).hi
        if hi == 0.0:
            continue
        for Q in set(wp) | set(wq):
            diff = abs(wp.get(Q, 0.0) - wq.get(Q, 0.0))
            c2 = max(c2, diff * Q.scale / hi)
    return PartitionConstants(float(c3), c2, c3)
