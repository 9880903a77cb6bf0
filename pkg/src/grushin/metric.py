"""Coordinate geometry of the Grushin plane.

The plane carries the horizontal frame ``X1 = d/dx``, ``X2 = x d/dy``.  Off the
singular line ``x = 0`` the metric is Riemannian, ``ds^2 = dx^2 + dy^2 / x^2``.
Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "KAPPA",
    "Point",
    "DistanceInterval",
    "MetricConstants",
    "dilate",
    "singular_distance",
    "distance_bounds",
    "dist_to_line",
    "comparison_upper",
    "curve_length",
    "segment_length",
]

#: d((0,0), (0,1)).  Length of the single-arc geodesic ``x = sin(bt)/b`` with
#: ``b^2 = pi/2``, which returns to the axis at ``t = pi/b = sqrt(2 pi)``.
KAPPA = math.sqrt(2.0 * math.pi)

# (2.2)-type bounds evaluated at (0,0), (0,1); used when kappa is unknown.
_KAPPA_LO = 0.25
_KAPPA_HI = 4.0


@dataclass(frozen=True, slots=True)
class Point:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    @property
    def on_line(self) -> bool:
        return self.x == 0.0


@dataclass(frozen=True, slots=True)
class DistanceInterval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.lo <= self.hi):
            raise ValueError(f"invalid distance interval [{self.lo}, {self.hi}]")

    def __contains__(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    def scaled(self, factor: float) -> "DistanceInterval":
        return DistanceInterval(self.lo * factor, self.hi * factor)


@dataclass(frozen=True, slots=True)
class MetricConstants:
    kappa: float = KAPPA

    def __post_init__(self) -> None:
        if not (_KAPPA_LO <= self.kappa <= _KAPPA_HI):
            raise ValueError(
                f"kappa={self.kappa} outside its certified bracket [{_KAPPA_LO}, {_KAPPA_HI}]"
            )


def _as_point(p) -> Point:
    return p if isinstance(p, Point) else Point(float(p[0]), float(p[1]))


def dilate(p, lam: float) -> Point:
    """Apply the anisotropic dilation ``(x, y) -> (lam x, lam^2 y)``."""
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    p = _as_point(p)
    return Point(lam * p.x, lam * lam * p.y)


def singular_distance(y1: float, y2: float, c: MetricConstants | None = None) -> float:
    """Exact distance between ``(0, y1)`` and ``(0, y2)``."""
    kappa = (c or MetricConstants()).kappa
    return kappa * math.sqrt(abs(y1 - y2))


def _lower_22(dx: float, dy: float, m: float) -> float:
    if dy == 0.0:
        return 0.5 * dx
    return 0.5 * (dx + dy / math.sqrt(m * m + 4.0 * dy))


def distance_bounds(p, q, c: MetricConstants | None = None) -> DistanceInterval:
    """Certified two-sided bracket for d(p, q).

    Off the singular line this is the closed-form estimate
    ``1/2 (|dx| + |dy| / sqrt(min|x|^2 + 4|dy|)) <= d <= 4 (|dx| + sqrt|dy|)``.
    When a point lies on ``x = 0`` the bracket is tightened with the exact
    distance along the line and the exact distance to the line.  If ``c`` is
    omitted the constant ``d((0,0),(0,1))`` is itself replaced by its bracket.
    """
    p, q = _as_point(p), _as_point(q)
    dx = abs(p.x - q.x)
    dy = abs(p.y - q.y)
    if dx == 0.0 and dy == 0.0:
        return DistanceInterval(0.0, 0.0)
    upper = 4.0 * (dx + math.sqrt(dy))
    if not (p.on_line or q.on_line):
        m = min(abs(p.x), abs(q.x))
        return DistanceInterval(_lower_22(dx, dy, m), upper)

    k_lo, k_hi = (c.kappa, c.kappa) if c is not None else (_KAPPA_LO, _KAPPA_HI)
    lower = _lower_22(dx, dy, 0.0)
    if p.on_line and q.on_line:
        lo = max(lower, k_lo * math.sqrt(dy))
        hi = min(upper, k_hi * math.sqrt(dy))
        return DistanceInterval(lo, max(lo, hi))
    off = q if p.on_line else p
    lo = max(lower, abs(off.x))
    # through the foot point (0, y_off) of the off-line point
    hi = min(upper, abs(off.x) + k_hi * math.sqrt(dy))
    return DistanceInterval(lo, hi)


def comparison_upper(p, q) -> float:
    """Certified upper bound from explicit comparison paths.

    Candidates: the closed-form estimate, the path through the singular line
    (two horizontal legs plus the exact singular arc), and for same-side pairs
    a horizontal leg followed by a vertical leg at the larger ``|x|``.
    """
    p, q = _as_point(p), _as_point(q)
    dx = abs(p.x - q.x)
    dy = abs(p.y - q.y)
    cands = [4.0 * (dx + math.sqrt(dy)), abs(p.x) + abs(q.x) + KAPPA * math.sqrt(dy)]
    if p.x * q.x > 0:
        cands.append(dx + dy / max(abs(p.x), abs(q.x)))
    return min(cands)


def dist_to_line(p) -> float:
    """Distance to the singular line; the horizontal segment realizes it."""
    return abs(_as_point(p).x)


def _simpson(f, a: float, b: float, fa: float, fm: float, fb: float, whole: float,
             tol: float, depth: int) -> float:
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    return (_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + _simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))


def segment_length(p, q, tol: float = 1e-9) -> float:
    """Riemannian length of the straight segment from ``p`` to ``q``.

    Infinite when the segment meets ``x = 0`` with ``dy != 0``; a segment that
    meets the line with ``dy == 0`` is horizontal and has length ``|dx|``.
    """
    p, q = _as_point(p), _as_point(q)
    dx, dy = q.x - p.x, q.y - p.y
    if dy == 0.0:
        return abs(dx)
    if p.x == 0.0 or q.x == 0.0 or (p.x < 0.0) != (q.x < 0.0):
        return math.inf
    if dx == 0.0:
        return abs(dy) / abs(p.x)

    def speed(s: float) -> float:
        x = p.x + s * dx
        return math.sqrt(dx * dx + dy * dy / (x * x))

    fa, fm, fb = speed(0.0), speed(0.5), speed(1.0)
    whole = (fa + 4.0 * fm + fb) / 6.0
    return _simpson(speed, 0.0, 1.0, fa, fm, fb, whole, tol, 50)


def curve_length(vertices: Sequence, tol: float = 1e-9) -> float:
    """Length of a polyline, summed segment by segment."""
    pts = [_as_point(v) for v in vertices]
    if len(pts) < 2:
        raise ValueError("a curve needs at least two vertices")
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += segment_length(a, b, tol)
        if math.isinf(total):
            return math.inf
    return total
