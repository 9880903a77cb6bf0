"""Whitney decomposition of the complement of the singular line.

Box ``(side, n, k)`` is ``[2^-n, 2^(1-n)] x [k 4^-n, (k+1) 4^-n]`` on the
positive side and its mirror image on the negative side.  Each box is the
image of a level-0 box under the dilation ``(x, y) -> (2^-n x, 4^-n y)``, so
box diameters are comparable to ``2^-n``, which is also the exact distance of
the box to the line.

The Whitney distance ``d_W(Q, R) = dist(Q, R) / min(size Q, size R)`` drives
the coloring.  Downstream the size of a box is its scale ``2^-n``; the
numerator is replaced by a certified lower bound so every W-ball computed
here contains the true one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .metric import DistanceInterval, Point, _as_point, comparison_upper

__all__ = [
    "LEVEL_RANGE",
    "SingularPointError",
    "LevelRangeError",
    "WhitneyBox",
    "WhitneyConstants",
    "box_containing",
    "boxes_in_window",
    "touches",
    "star",
    "star2",
    "nearest_singular_point",
    "scale",
    "diam_bounds",
    "dist_to_singular",
    "pair_lower",
    "numerator_bounds",
    "whitney_distance_bounds",
    "surrogate_distance_bounds",
    "LevelOffsets",
    "wball_offsets",
    "wball",
    "wball_count",
    "brute_force_wball",
    "Coloring",
    "build_coloring",
    "coloring_periods",
    "verify_coloring",
    "greedy_coloring",
]

#: Default admissible level range; finer or coarser points are rejected.
LEVEL_RANGE = (-20, 40)


class SingularPointError(ValueError):
    """The point lies on the singular line, where no Whitney box exists."""


class LevelRangeError(ValueError):
    """The point's Whitney level falls outside the admissible range."""


@dataclass(frozen=True, slots=True, order=True)
class WhitneyBox:
    side: int
    n: int
    k: int

    def __post_init__(self) -> None:
        if self.side not in (1, -1):
            raise ValueError(f"side must be +1 or -1, got {self.side}")

    @property
    def scale(self) -> float:
        return math.ldexp(1.0, -self.n)

    @property
    def height(self) -> float:
        return math.ldexp(1.0, -2 * self.n)

    @property
    def abs_x_range(self) -> tuple[float, float]:
        s = self.scale
        return s, 2.0 * s

    @property
    def x_range(self) -> tuple[float, float]:
        lo, hi = self.abs_x_range
        return (lo, hi) if self.side > 0 else (-hi, -lo)

    @property
    def y_range(self) -> tuple[float, float]:
        h = self.height
        return self.k * h, (self.k + 1) * h

    @property
    def center(self) -> Point:
        (x0, x1), (y0, y1) = self.x_range, self.y_range
        return Point(0.5 * (x0 + x1), 0.5 * (y0 + y1))

    def contains(self, p) -> bool:
        """Half-open membership, matching :func:`box_containing`."""
        p = _as_point(p)
        if p.x == 0.0 or (p.x > 0) != (self.side > 0):
            return False
        lo, hi = self.abs_x_range
        y0, y1 = self.y_range
        return lo <= abs(p.x) < hi and y0 <= p.y < y1

    def corners(self) -> list[Point]:
        return [Point(x, y) for x in self.x_range for y in self.y_range]

    def dilated(self, steps: int = 1) -> "WhitneyBox":
        """Image under the dilation by ``2^steps``."""
        return WhitneyBox(self.side, self.n - steps, self.k)

    def label(self) -> str:
        return f"{'+' if self.side > 0 else '-'},{self.n},{self.k}"


@dataclass(frozen=True, slots=True)
class WhitneyConstants:
    L: float = 1.0
    a: int = 32 * 8 + 1
    c_diam_lo: float = 1.0
    c_diam_hi: float = 8.0

    @property
    def tau_theory(self) -> float:
        return 2000.0 * self.L ** 2


def box_containing(p, level_range: tuple[int, int] = LEVEL_RANGE) -> WhitneyBox:
    p = _as_point(p)
    if p.x == 0.0:
        raise SingularPointError(f"{p} lies on the singular line")
    _, e = math.frexp(abs(p.x))
    n = 1 - e
    if not level_range[0] <= n <= level_range[1]:
        raise LevelRangeError(f"level {n} of {p} outside {level_range}")
    k = math.floor(math.ldexp(p.y, 2 * n))
    return WhitneyBox(1 if p.x > 0 else -1, n, k)


def boxes_in_window(x0: float, y0: float, x1: float, y1: float, *, n_max: int = 6,
                    level_range: tuple[int, int] = LEVEL_RANGE) -> list[WhitneyBox]:
    """Boxes meeting the closed window, down to level ``n_max`` near the line."""
    out = []
    n_lo = max(level_range[0], 1 - math.frexp(max(abs(x0), abs(x1)))[1])
    for n in range(n_lo, min(n_max, level_range[1]) + 1):
        s = math.ldexp(1.0, -n)
        h = math.ldexp(1.0, -2 * n)
        k_lo, k_hi = math.floor(y0 / h), math.ceil(y1 / h) - 1
        for side in (1, -1):
            xa, xb = (s, 2 * s) if side > 0 else (-2 * s, -s)
            if xb < x0 or xa > x1:
                continue
            out.extend(WhitneyBox(side, n, k) for k in range(k_lo, k_hi + 1))
    return sorted(out)


def _y_units(Q: WhitneyBox, level: int) -> tuple[int, int]:
    f = 4 ** (level - Q.n)
    return Q.k * f, (Q.k + 1) * f


def touches(Q: WhitneyBox, R: WhitneyBox) -> bool:
    """Closed boxes intersect (edges and corners count)."""
    if Q.side != R.side or abs(Q.n - R.n) > 1:
        return False
    N = max(Q.n, R.n)
    a0, a1 = _y_units(Q, N)
    b0, b1 = _y_units(R, N)
    return a0 <= b1 and b0 <= a1


def _star_candidates(Q: WhitneyBox):
    n, k = Q.n, Q.k
    yield from (WhitneyBox(Q.side, n, kk) for kk in range(k - 1, k + 2))
    yield from (WhitneyBox(Q.side, n - 1, kk) for kk in range(k // 4 - 1, k // 4 + 2))
    yield from (WhitneyBox(Q.side, n + 1, kk) for kk in range(4 * k - 2, 4 * k + 6))


@lru_cache(maxsize=65536)
def star(Q: WhitneyBox) -> frozenset[WhitneyBox]:
    """Boxes whose closure meets the closure of ``Q`` (``Q`` included)."""
    return frozenset(R for R in _star_candidates(Q) if touches(Q, R))


@lru_cache(maxsize=16384)
def star2(Q: WhitneyBox) -> frozenset[WhitneyBox]:
    return frozenset(S for R in star(Q) for S in star(R))


def nearest_singular_point(Q: WhitneyBox) -> Point:
    return Point(0.0, (Q.k + 0.5) * Q.height)


def scale(Q: WhitneyBox) -> float:
    return Q.scale


def dist_to_singular(Q: WhitneyBox) -> float:
    """Exact distance from the box to the line, realized horizontally."""
    return Q.scale


def diam_bounds(Q: WhitneyBox) -> DistanceInterval:
    """Diameter bracket.

    Lower: the horizontal width, an exact distance.  Upper: the closed-form
    bound ``4(|dx| + sqrt|dy|)`` maximized over corner pairs, attained at
    opposite corners: ``4 (2^-n + 2^-n) = 8 * 2^-n``.
    """
    s = Q.scale
    corners = Q.corners()
    hi = max(4.0 * (abs(p.x - q.x) + math.sqrt(abs(p.y - q.y))) for p in corners for q in corners)
    return DistanceInterval(s, hi)


# --------------------------------------------------------------------------
# box-to-box distances


def pair_lower(side_q, n_q, k_q, side_r, n_r, k_r) -> np.ndarray:
    """Certified lower bound on ``dist(Q, R)``, vectorized over box arrays.

    For ``p in Q, q in R``: ``|dx|`` is at least the horizontal gap (the sum of
    inner edges for opposite sides, since a path must reach the line),
    ``|dy|`` at least the vertical gap and ``min(|x_p|, |x_q|)`` at most the
    smaller outer edge.  The closed-form lower estimate increases in the first
    two and decreases in the third; it is combined with ``d >= |dx|``.
    Touching boxes get 0.
    """
    side_q, n_q, k_q, side_r, n_r, k_r = np.broadcast_arrays(
        *(np.asarray(v, dtype=np.int64) for v in (side_q, n_q, k_q, side_r, n_r, k_r)))
    sq = np.ldexp(1.0, -n_q)
    sr = np.ldexp(1.0, -n_r)
    hq = np.ldexp(1.0, -2 * n_q)
    hr = np.ldexp(1.0, -2 * n_r)
    same = side_q == side_r
    gx_same = np.maximum(0.0, np.maximum(sr - 2.0 * sq, sq - 2.0 * sr))
    gx = np.where(same, gx_same, sq + sr)
    yq0, yq1 = k_q * hq, (k_q + 1) * hq
    yr0, yr1 = k_r * hr, (k_r + 1) * hr
    gy = np.maximum(0.0, np.maximum(yr0 - yq1, yq0 - yr1))
    m = np.minimum(2.0 * sq, 2.0 * sr)
    with np.errstate(invalid="ignore", divide="ignore"):
        vert = np.where(gy > 0.0, gy / np.sqrt(m * m + 4.0 * gy), 0.0)
    return np.maximum(gx, 0.5 * (gx + vert))


def _probe_points(Q: WhitneyBox, R: WhitneyBox) -> list[Point]:
    (x0, x1), (y0, y1) = Q.x_range, Q.y_range
    (u0, u1), (v0, v1) = R.x_range, R.y_range
    xs = {x0, x1, min(max(u0, x0), x1), min(max(u1, x0), x1), 0.5 * (x0 + x1)}
    ys = {y0, y1, min(max(v0, y0), y1), min(max(v1, y0), y1), 0.5 * (y0 + y1)}
    return [Point(x, y) for x in xs for y in ys]


def numerator_bounds(Q: WhitneyBox, R: WhitneyBox) -> DistanceInterval:
    """Bracket for ``dist(Q, R)``: certified lower bound and a sampled upper bound.

    The upper bound is the shortest explicit comparison path over probe pairs
    on the two boxes (corners, midpoints and mutual projections).
    """
    if Q == R or touches(Q, R):
        return DistanceInterval(0.0, 0.0)
    lo = float(pair_lower(Q.side, Q.n, Q.k, R.side, R.n, R.k))
    hi = min(comparison_upper(p, q) for p in _probe_points(Q, R) for q in _probe_points(R, Q))
    return DistanceInterval(lo, max(lo, hi))


def whitney_distance_bounds(Q: WhitneyBox, R: WhitneyBox) -> DistanceInterval:
    """Bracket for ``dist(Q, R) / min(diam Q, diam R)`` with certified diameters."""
    num = numerator_bounds(Q, R)
    dq, dr = diam_bounds(Q), diam_bounds(R)
    return DistanceInterval(num.lo / min(dq.hi, dr.hi), num.hi / min(dq.lo, dr.lo))


def surrogate_distance_bounds(Q: WhitneyBox, R: WhitneyBox) -> DistanceInterval:
    """Bracket for ``dist(Q, R) / min(scale Q, scale R)``, the form used downstream."""
    return numerator_bounds(Q, R).scaled(1.0 / min(Q.scale, R.scale))


# --------------------------------------------------------------------------
# W-balls


@dataclass(frozen=True, slots=True)
class LevelOffsets:
    """Boxes of level ``n_Q + dn`` (same or flipped side) inside a W-ball.

    ``dn >= 0``: indices ``4^dn k_Q + d`` for ``lo <= d <= hi`` (exact).
    ``dn < 0``: indices ``floor(k_Q / 4^-dn) + d`` (a union over the position
    of ``Q`` inside its ancestor, hence independent of ``k_Q``).
    """

    dn: int
    flip: bool
    lo: int
    hi: int

    @property
    def count(self) -> int:
        return self.hi - self.lo + 1

    def indices(self, k: int) -> range:
        base = k * 4 ** self.dn if self.dn >= 0 else k // 4 ** (-self.dn)
        return range(base + self.lo, base + self.hi + 1)


def _gap_budget(T: float, gx: float, m: float) -> float:
    """Largest vertical gap ``G`` with ``1/2 (gx + G / sqrt(m^2 + 4G)) <= T``."""
    B = 2.0 * T - gx
    return 2.0 * B * B + B * math.sqrt(4.0 * B * B + m * m)


@lru_cache(maxsize=64)
def wball_offsets(tau: float) -> tuple[LevelOffsets, ...]:
    """Offset pattern of the W-ball of radius ``tau`` around a level-0 box.

    By dilation invariance the pattern of any box is the same; the vertical
    budget is padded by one part in 10^9 so the pattern stays a superset under
    rounding.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    out = []
    span = int(math.ceil(math.log2(tau + 2.0))) + 1
    for dn in range(-span, span + 1):
        sr = math.ldexp(1.0, -dn)
        T = tau * min(1.0, sr)
        m = min(2.0, 2.0 * sr)
        for flip in (False, True):
            if flip:
                gx = 1.0 + sr
            elif dn >= 0:
                gx = max(0.0, 1.0 - 2.0 * sr)
            else:
                gx = sr - 2.0
            if gx >= T:
                continue
            G = _gap_budget(T, gx, m) * (1.0 + 1e-9)
            if dn >= 0:
                h = math.ldexp(1.0, -2 * dn)
                extra = math.floor(G / h)
                out.append(LevelOffsets(dn, flip, -1 - extra, 4 ** dn + extra))
            else:
                c = 4.0 ** (-dn)
                extra = 1 + math.floor(G / c)
                out.append(LevelOffsets(dn, flip, -extra, extra))
    return tuple(out)


def wball_count(tau: float) -> int:
    return sum(o.count for o in wball_offsets(tau))


def wball(Q: WhitneyBox, tau: float) -> frozenset[WhitneyBox]:
    """Superset of ``{R : dist(Q,R) / min(scale) < tau}`` with the same size for every ``Q``."""
    out = []
    for o in wball_offsets(tau):
        side = -Q.side if o.flip else Q.side
        out.extend(WhitneyBox(side, Q.n + o.dn, kk) for kk in o.indices(Q.k))
    return frozenset(out)


def brute_force_wball(Q: WhitneyBox, tau: float, reach: int = 2) -> frozenset[WhitneyBox]:
    """Direct enumeration: all boxes whose certified lower d_W is below ``tau``.

    Scans levels within ``log2(tau) + reach`` of ``Q`` and, per level, every
    index whose y-range lies within a generous window around ``Q``.
    """
    span = int(math.ceil(math.log2(tau + 2.0))) + reach
    found = []
    yq0, yq1 = Q.y_range
    for n in range(Q.n - span, Q.n + span + 1):
        h = math.ldexp(1.0, -2 * n)
        t = tau * min(Q.scale, math.ldexp(1.0, -n))
        # the lower bound exceeds sqrt(gap)/4 - t/2 once the gap passes 16 t^2 + 8 t scale
        window = 64.0 * t * t + 16.0 * t * Q.scale + 4.0 * max(h, Q.height)
        ks = np.arange(math.floor((yq0 - window) / h) - 1, math.ceil((yq1 + window) / h) + 1)
        for side in (1, -1):
            lo = pair_lower(Q.side, Q.n, Q.k, side, n, ks)
            ms = np.minimum(Q.scale, math.ldexp(1.0, -n))
            keep = ks[lo / ms < tau]
            found.extend(WhitneyBox(side, n, int(k)) for k in keep)
    return frozenset(found)


# --------------------------------------------------------------------------
# coloring


@dataclass(frozen=True)
class Coloring:
    """Periodic coloring ``(side, n mod P, k mod S) -> {1..M}``."""

    tau: float
    period_n: int
    period_k: int
    palette: np.ndarray = field(repr=False)
    M: int = 0
    wball_size: int = 0

    def __post_init__(self) -> None:
        pal = np.asarray(self.palette, dtype=np.int64)
        if pal.shape != (2, self.period_n, self.period_k):
            raise ValueError(f"palette shape {pal.shape} != (2, {self.period_n}, {self.period_k})")
        pal = pal.copy()
        pal.setflags(write=False)
        object.__setattr__(self, "palette", pal)
        object.__setattr__(self, "M", int(pal.max()))

    def color(self, Q: WhitneyBox) -> int:
        return int(self.palette[0 if Q.side > 0 else 1, Q.n % self.period_n, Q.k % self.period_k])

    def colors(self, side, n, k) -> np.ndarray:
        side = np.asarray(side)
        return self.palette[np.where(side > 0, 0, 1), np.asarray(n) % self.period_n,
                            np.asarray(k) % self.period_k]

    def to_dict(self) -> dict:
        return {"tau": self.tau, "period_n": self.period_n, "period_k": self.period_k,
                "M": self.M, "wball_size": self.wball_size}


def build_coloring(tau: float = 8.0) -> Coloring:
    """Proper periodic coloring for the W-balls of radius ``tau``.

    ``P`` exceeds the largest level offset in a W-ball and ``S`` the largest
    same-level index offset, so two distinct boxes in a common W-ball differ
    in side, in ``n mod P`` or in ``k mod S``.  A level shift permutes the
    color slots cyclically.
    """
    P, S, _ = coloring_periods(tau)
    pal = 1 + np.arange(2 * P * S, dtype=np.int64).reshape(P, 2, S).transpose(1, 0, 2)
    return Coloring(tau, P, S, pal, wball_size=wball_count(tau))


def coloring_periods(tau: float) -> tuple[int, int, int]:
    """``(P, S, M)`` of the periodic coloring for ``tau`` without building its palette."""
    offsets = wball_offsets(tau)
    P = max(abs(o.dn) for o in offsets) + 1
    same_level = [o for o in offsets if o.dn == 0 and not o.flip]
    S = max(max(abs(o.lo), abs(o.hi)) for o in same_level) + 1
    return P, S, 2 * P * S


def _level_k_bound(n: int) -> int:
    return 16 * 4 ** abs(n)


def verify_coloring(coloring: Coloring, tau: float | None = None,
                    levels: tuple[int, int] = (-4, 8),
                    k_bound=_level_k_bound, max_violations: int | None = None) -> dict:
    """Exhaustive properness check on a finite window of boxes.

    For every pair of levels and sides and every box ``Q`` in the window, the
    same-colored boxes ``R`` of the other level nearest to ``Q`` vertically
    are located directly from the palette; since the certified lower bound
    increases with the vertical gap, ``Q`` conflicts with some same-colored box
    iff it conflicts with one of these.  Uses box coordinates only, not the
    W-ball offset table.  With ``max_violations`` the scan stops once that
    many conflicting pairs are found.
    """
    tau = coloring.tau if tau is None else tau
    P, S = coloring.period_n, coloring.period_k
    pal = coloring.palette
    violations = 0
    example = None
    checked = 0
    n_lo, n_hi = levels
    for n1, n2 in product(range(n_lo, n_hi + 1), repeat=2):
        b1, b2 = k_bound(n1), k_bound(n2)
        ms = min(math.ldexp(1.0, -n1), math.ldexp(1.0, -n2))
        for s1, s2 in product((0, 1), repeat=2):
            partners = _matching_residues(pal[s1, n1 % P], pal[s2, n2 % P])
            if partners is None:
                continue
            k1_all = np.arange(-b1, b1 + 1, dtype=np.int64)
            # index range of level n2 overlapping Q's y-range
            if n2 >= n1:
                f = 4 ** (n2 - n1)
                c_lo_all, c_hi_all = k1_all * f, k1_all * f + f - 1
            else:
                f = 4 ** (n1 - n2)
                c_lo_all = c_hi_all = np.floor_divide(k1_all, f)
            side1 = 1 if s1 == 0 else -1
            side2 = 1 if s2 == 0 else -1
            for col in range(partners.shape[1]):
                r2_all = partners[k1_all % S, col]
                live = r2_all >= 0
                k1, r2 = k1_all[live], r2_all[live]
                c_lo, c_hi = c_lo_all[live], c_hi_all[live]
                first = c_lo + (r2 - c_lo) % S
                last = c_hi - (c_hi - r2) % S
                for cand in (first, first - S, last, last + S):
                    ok = (cand >= -b2) & (cand <= b2)
                    if s1 == s2 and n1 == n2:
                        ok &= cand != k1
                    if not ok.any():
                        continue
                    kq, kr = k1[ok], cand[ok]
                    lo = pair_lower(side1, n1, kq, side2, n2, kr)
                    bad = lo / ms < tau
                    checked += int(kq.size)
                    if bad.any():
                        violations += int(bad.sum())
                        if example is None:
                            i = int(np.argmax(bad))
                            example = (WhitneyBox(side1, n1, int(kq[i])),
                                       WhitneyBox(side2, n2, int(kr[i])))
                        if max_violations is not None and violations >= max_violations:
                            return {"proper": False, "violations": violations, "example": example,
                                    "candidate_pairs": checked, "truncated": True}
    return {"proper": violations == 0, "violations": violations, "example": example,
            "candidate_pairs": checked, "truncated": False}


def _matching_residues(row1: np.ndarray, row2: np.ndarray) -> np.ndarray | None:
    """For each residue of ``row1``, the residues of ``row2`` with the same color.

    Returns an array padded with ``-1`` (one column per multiplicity), or
    ``None`` when the rows share no color.
    """
    common = np.intersect1d(row1, row2)
    if common.size == 0:
        return None
    order = np.argsort(row2, kind="stable")
    sorted2 = row2[order]
    start = np.searchsorted(sorted2, row1, side="left")
    stop = np.searchsorted(sorted2, row1, side="right")
    width = int((stop - start).max())
    out = np.full((row1.size, width), -1, dtype=np.int64)
    for j in range(width):
        has = start + j < stop
        out[has, j] = order[start[has] + j]
    return out


def greedy_coloring(boxes: list[WhitneyBox], tau: float) -> tuple[dict, list[tuple[int, int]]]:
    """Greedy coloring of the explicit conflict graph on a finite box list.

    Returns the color map and the edge list (pairs with certified lower
    ``d_W < tau``).
    """
    arr = np.array([(b.side, b.n, b.k) for b in boxes], dtype=np.int64)
    n = len(boxes)
    edges = []
    adj: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        lo = pair_lower(arr[i, 0], arr[i, 1], arr[i, 2], arr[i + 1:, 0], arr[i + 1:, 1], arr[i + 1:, 2])
        ms = np.minimum(np.ldexp(1.0, -arr[i, 1]), np.ldexp(1.0, -arr[i + 1:, 1]))
        for j in np.nonzero(lo / ms < tau)[0] + i + 1:
            edges.append((i, int(j)))
            adj[i].append(int(j))
            adj[int(j)].append(i)
    colors: dict[WhitneyBox, int] = {}
    for i in range(n):
        used = {colors[boxes[j]] for j in adj[i] if boxes[j] in colors}
        c = 1
        while c in used:
            c += 1
        colors[boxes[i]] = c
    return colors, edges
