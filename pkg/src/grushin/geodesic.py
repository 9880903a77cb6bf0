"""Numerical oracles for the Carnot-Caratheodory distance.

Two independent routes:

* :func:`shooting_distance` solves the boundary value problem for the
  Hamiltonian geodesic flow of ``H = (px^2 + x^2 py^2) / 2``.  The flow is
  integrable in closed form, so shooting reduces to one-dimensional root
  finding in the launch angle on each arc branch.
* :func:`grid_distance` runs Dijkstra on an anisotropic grid whose edges are
  straight segments weighted by their exact Riemannian length.  Every grid
  path is an admissible curve, so the value approaches the distance from
  above as the grid is refined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from ._backend import kernels
from .metric import MetricConstants, Point, _as_point, comparison_upper, distance_bounds

__all__ = [
    "Covector",
    "OracleResult",
    "NoConvergence",
    "geodesic_flow",
    "shooting_distance",
    "grid_distance",
    "GridOracle",
    "oracle_distance",
]


class NoConvergence(RuntimeError):
    """Raised when an oracle cannot produce a distance within its budget."""

    def __init__(self, message: str, best: "OracleResult | None" = None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True, slots=True)
class Covector:
    px: float
    py: float


@dataclass(frozen=True, slots=True)
class OracleResult:
    distance: float
    method: str
    achieved_tolerance: float

    def __post_init__(self) -> None:
        if not self.distance >= 0.0:
            raise ValueError(f"negative distance {self.distance}")


# --------------------------------------------------------------------------
# geodesic flow


def _sinc(u: float) -> float:
    if abs(u) < 1e-4:
        return 1.0 - u * u / 6.0
    return math.sin(u) / u


def _psi(u: float) -> float:
    """(u - sin u) / u^3, stable near zero."""
    if abs(u) < 1e-2:
        u2 = u * u
        return 1.0 / 6.0 - u2 / 120.0 + u2 * u2 / 5040.0
    return (u - math.sin(u)) / (u * u * u)


def geodesic_flow(p0, c0: Covector, t: float, *, atol: float = 1e-9) -> Point:
    """Endpoint of the unit-speed geodesic from ``p0`` with initial covector ``c0``.

    ``x(t) = x0 cos(bt) + px sin(bt)/b`` with ``b = py`` (conserved) and
    ``y' = b x^2`` integrated in closed form.
    """
    p0 = _as_point(p0)
    x0, y0 = p0.x, p0.y
    px, b = c0.px, c0.py
    if abs(px * px + x0 * x0 * b * b - 1.0) > atol:
        raise ValueError(f"covector {c0} is not unit-normalized at x0={x0}")
    if t < 0:
        raise ValueError(f"negative time {t}")
    bt = b * t
    x = x0 * math.cos(bt) + px * t * _sinc(bt)
    sb = _sinc(bt)
    integral = (x0 * x0 * 0.5 * t * (1.0 + _sinc(2.0 * bt))
                + x0 * px * t * t * sb * sb
                + 2.0 * px * px * t ** 3 * _psi(2.0 * bt))
    return Point(x, y0 + b * integral)


# --------------------------------------------------------------------------
# shooting


@lru_cache(maxsize=8)
def _launch_grid(n_angles: int) -> np.ndarray:
    uniform = math.pi * (np.arange(n_angles) + 0.5) / n_angles
    k = np.arange(1, 13, dtype=float)
    ends = np.concatenate([math.pi * 10.0 ** -k, math.pi * (1.0 - 10.0 ** -k)])
    grid = np.unique(np.concatenate([uniform, ends]))
    grid.setflags(write=False)
    return grid


def shooting_distance(p, q, tol: float = 1e-6, *, n_angles: int = 64, max_arcs: int = 4,
                      constants: MetricConstants | None = None) -> OracleResult:
    """Distance by shooting along normal geodesics.

    The pair is normalized by the plane's isometries (swap, ``x -> -x``,
    ``y -> -y``, vertical translation) so that the launch point has the larger
    ``|x|``, lies at ``x0 > 0`` and the target is above it; then by dilation to
    ``x0 = 1``.  Launch angles are scanned on ``n_angles`` directions (plus
    clustered directions near horizontal) on each of the first ``max_arcs``
    arc branches; every bracketed root is refined and the shortest kept.
    """
    p, q = _as_point(p), _as_point(q)
    dy = abs(q.y - p.y)
    if p == q:
        return OracleResult(0.0, "shooting", 0.0)
    if dy == 0.0:
        # horizontal segment attains the lower bound |dx|
        return OracleResult(abs(q.x - p.x), "shooting", 0.0)
    if p.x == 0.0 and q.x == 0.0:
        # single arc from the axis back to the axis; k arcs cost sqrt(k) times more
        b = math.sqrt(math.pi / (2.0 * dy))
        return OracleResult(math.pi / b, "shooting", 0.0)

    start, end = (p, q) if abs(p.x) >= abs(q.x) else (q, p)
    x0 = abs(start.x)
    r = end.x / start.x
    target = dy / (x0 * x0)
    if target < _FLAT_TARGET:
        return _flat_distance(x0, r, target)
    length, eps, kind, m, resid, n_roots = kernels.shoot(r, target, _launch_grid(n_angles), max_arcs)
    if not math.isfinite(length):
        raise NoConvergence(f"no geodesic bracketed between {p} and {q}")
    achieved = math.sin(eps) * x0 * abs(float(resid)) + 4.0 * np.finfo(float).eps * length * x0
    result = OracleResult(length * x0, "shooting", achieved)
    bounds = distance_bounds(p, q, constants)
    slack = tol + 1e-12 * result.distance
    if achieved > tol or not (bounds.lo - slack <= result.distance <= bounds.hi + slack):
        raise NoConvergence(
            f"shooting result {result.distance} (tol {achieved:.2e}) rejected for {p}->{q}",
            best=result,
        )
    return result


#: Below this normalized rise the launch angle is too close to horizontal to
#: resolve accurately; the geodesic is then straight up to second order.
_FLAT_TARGET = 1e-4


def _flat_distance(x0: float, r: float, target: float) -> OracleResult:
    """Distance for a rise ``target * x0^2`` that is negligible against ``x0^2``.

    Two candidate paths: the straight segment (same side only), and a segment
    rising to half the starting abscissa followed by a horizontal run.  The
    shorter exceeds the distance by a relative amount below ``target^2``,
    which is reported as the achieved tolerance.
    """
    dy = target * x0 * x0
    length = float(kernels.segment_lengths(x0, 0.0, 0.5 * x0, dy)) + abs(0.5 - r) * x0
    if r > 0:
        length = min(length, float(kernels.segment_lengths(x0, 0.0, r * x0, dy)))
    return OracleResult(length, "shooting", length * target * target)


# --------------------------------------------------------------------------
# grid oracle


def _scale_estimate(p: Point, q: Point) -> float:
    dx = abs(p.x - q.x)
    dy = abs(p.y - q.y)
    xm = max(abs(p.x), abs(q.x))
    vert = math.sqrt(dy) if xm == 0.0 else min(math.sqrt(dy), dy / xm)
    return max(dx + vert, 1e-300)


class GridOracle:
    """Anisotropic grid shortest-path oracle.

    Columns are spaced ``h = resolution * scale`` in ``x``; the rows of a column
    at ``|x|`` are spaced ``h * 2^floor(log2|x|)`` in ``y`` so one row step costs
    between ``h/2`` and ``h``.  Columns closer than ``h/2`` to the axis are
    replaced by a column of axis nodes joined horizontally to the innermost
    columns.  Each node links to nodes up to ``stencil`` columns away within a
    slope cone, plus its vertical neighbours.

    The grid is built per query around the pair, over the region any
    minimizing geodesic can visit: ``y`` between the endpoints (``y`` is
    monotone along geodesics) and ``|x|`` within half a certified upper bound
    of the endpoint mean.
    """

    def __init__(self, window: tuple[float, float, float, float] = (-2.0, 2.0, -2.0, 2.0),
                 resolution: float = 1.0 / 32.0, stencil: int = 3, slope: float = 3.0):
        if not resolution > 0:
            raise ValueError("resolution must be positive")
        self.window = tuple(float(v) for v in window)
        self.resolution = float(resolution)
        self.stencil = int(stencil)
        self.slope = float(slope)

    def contains(self, p: Point) -> bool:
        x0, x1, y0, y1 = self.window
        return x0 <= p.x <= x1 and y0 <= p.y <= y1

    def distance(self, p, q) -> OracleResult:
        p, q = _as_point(p), _as_point(q)
        for pt in (p, q):
            if not self.contains(pt):
                raise ValueError(f"{pt} outside grid window {self.window}")
        if p == q:
            return OracleResult(0.0, "grid", 0.0)
        if p.y == q.y:
            return OracleResult(abs(p.x - q.x), "grid", 0.0)
        # the grid is anchored at the larger-|x| endpoint, on the positive side
        if abs(q.x) > abs(p.x):
            p, q = q, p
        if p.x < 0:
            p, q = Point(-p.x, p.y), Point(-q.x, q.y)
        graph = _build_graph(p, q, self.resolution, self.stencil, self.slope)
        dist = dijkstra(graph.matrix, directed=False, indices=graph.src,
                        limit=1.5 * graph.limit)
        d = float(dist[graph.dst])
        if not math.isfinite(d):
            raise NoConvergence(f"grid path not found between {p} and {q}")
        return OracleResult(d, "grid", d - distance_bounds(p, q).lo)


@dataclass
class _Graph:
    matrix: object
    src: int
    dst: int
    limit: float
    n_nodes: int


class _Builder:
    def __init__(self):
        self.xs: list[np.ndarray] = []
        self.ys: list[np.ndarray] = []
        self.n = 0
        self.ei: list[np.ndarray] = []
        self.ej: list[np.ndarray] = []

    def add_nodes(self, x, y) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.broadcast_to(np.asarray(y, dtype=float), x.shape).copy()
        ids = np.arange(self.n, self.n + x.size)
        self.xs.append(x)
        self.ys.append(y)
        self.n += x.size
        return ids

    def add_edges(self, i, j) -> None:
        self.ei.append(np.asarray(i, dtype=np.int64).ravel())
        self.ej.append(np.asarray(j, dtype=np.int64).ravel())

    def finish(self):
        x = np.concatenate(self.xs)
        y = np.concatenate(self.ys)
        i = np.concatenate(self.ei)
        j = np.concatenate(self.ej)
        keep = i != j
        i, j = i[keep], j[keep]
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        key = np.unique(lo * self.n + hi)
        lo, hi = key // self.n, key % self.n
        w = kernels.segment_lengths(x[lo], y[lo], x[hi], y[hi])
        ok = np.isfinite(w)
        lo, hi, w = lo[ok], hi[ok], w[ok]
        # zero-length edges would vanish from the sparse graph
        w = np.maximum(w, 1e-300)
        return x, y, coo_matrix((w, (lo, hi)), shape=(self.n, self.n)).tocsr()


class _Column:
    __slots__ = ("x", "h", "j0", "ids")

    def __init__(self, x: float, h: float, j0: int, ids: np.ndarray):
        self.x, self.h, self.j0, self.ids = x, h, j0, ids

    def y(self, base: float) -> np.ndarray:
        return base + (self.j0 + np.arange(self.ids.size)) * self.h


def _row_step(x: float, h: float) -> float:
    return h * 2.0 ** math.floor(math.log2(abs(x)))


def _build_graph(p: Point, q: Point, resolution: float, stencil: int, slope: float) -> _Graph:
    """Grid around the pair; ``p`` has ``x > 0`` and the larger ``|x|``."""
    h = resolution * _scale_estimate(p, q)
    upper = comparison_upper(p, q)
    x_hi = 0.5 * (abs(p.x) + abs(q.x) + upper) + h
    x_lo_bound = 0.5 * (abs(p.x) + abs(q.x) - upper) if q.x > 0 else -1.0
    y_lo, y_hi = min(p.y, q.y), max(p.y, q.y)
    base = p.y

    b = _Builder()
    # column x positions on the positive side, aligned with p
    if x_lo_bound > 0.5 * h:
        first = p.x - math.floor((p.x - max(x_lo_bound - h, 0.5 * h)) / h) * h
        crossing = False
    else:
        first = 0.5 * h + (p.x - 0.5 * h) % h
        crossing = True
    n_cols = int(math.floor((x_hi - first) / h)) + 1
    sides = (1.0, -1.0) if crossing else (1.0,)
    columns: dict[float, list[_Column]] = {}
    for s in sides:
        cols = []
        for c in range(n_cols):
            x = first + c * h
            rs = _row_step(x, h)
            j0 = math.floor((y_lo - base) / rs) - 1
            j1 = math.ceil((y_hi - base) / rs) + 1
            ids = b.add_nodes(np.full(j1 - j0 + 1, s * x), base + np.arange(j0, j1 + 1) * rs)
            cols.append(_Column(s * x, rs, j0, ids))
            b.add_edges(ids[:-1], ids[1:])
        columns[s] = cols
    for s in sides:
        cols = columns[s]
        for c, col in enumerate(cols):
            ycol = col.y(base)
            for m in range(1, stencil + 1):
                if c + m >= len(cols):
                    break
                tgt = cols[c + m]
                reach = slope * m * h * max(abs(col.x), abs(tgt.x))
                _connect(b, col.ids, ycol, tgt, base, reach)
    if crossing:
        inner = columns[1.0][0]
        yrow = inner.y(base)
        axis = b.add_nodes(np.zeros(inner.ids.size), yrow)
        b.add_edges(axis, inner.ids)
        b.add_edges(axis, columns[-1.0][0].ids)

    all_cols = [c for s in sides for c in columns[s]]
    src = _insert(b, p, all_cols, base, h, stencil, slope, crossing)
    dst = _insert(b, q, all_cols, base, h, stencil, slope, crossing)
    _, _, matrix = b.finish()
    return _Graph(matrix, src, dst, upper, b.n)


def _connect(b: _Builder, ids: np.ndarray, ys: np.ndarray, tgt: _Column, base: float,
             reach: float) -> None:
    lo = np.ceil((ys - reach - base) / tgt.h).astype(np.int64) - tgt.j0
    hi = np.floor((ys + reach - base) / tgt.h).astype(np.int64) - tgt.j0
    lo = np.clip(lo, 0, tgt.ids.size - 1)
    hi = np.clip(hi, -1, tgt.ids.size - 1)
    counts = np.maximum(hi - lo + 1, 0)
    if counts.sum() == 0:
        return
    src = np.repeat(ids, counts)
    start = np.repeat(lo - np.cumsum(counts) + counts, counts)
    offs = np.arange(counts.sum()) + start
    b.add_edges(src, tgt.ids[offs])


def _insert(b: _Builder, pt: Point, cols: list[_Column], base: float, h: float, stencil: int,
            slope: float, crossing: bool) -> int:
    for col in cols:
        if col.x == pt.x:
            k = (pt.y - base) / col.h - col.j0
            if k == int(k) and 0 <= k < col.ids.size:
                return int(col.ids[int(k)])
    (node,) = b.add_nodes([pt.x], [pt.y])
    if crossing and abs(pt.x) < abs(cols[0].x):
        # inside the axis strip: only horizontal moves reach the columns
        (axis,) = b.add_nodes([0.0], [pt.y])
        b.add_edges([node], [axis])
        for s in (1.0, -1.0):
            (foot,) = b.add_nodes([s * abs(cols[0].x)], [pt.y])
            b.add_edges([axis, node], [foot, foot])
            _attach(b, foot, s * abs(cols[0].x), pt.y, cols, base, h, stencil, slope)
        return int(node)
    _attach(b, node, pt.x, pt.y, cols, base, h, stencil, slope)
    return int(node)


def _attach(b: _Builder, node: int, x: float, y: float, cols: list[_Column], base: float,
            h: float, stencil: int, slope: float) -> None:
    for col in cols:
        if col.x * x <= 0:
            continue
        dcols = abs(col.x - x) / h
        if dcols > stencil + 1:
            continue
        reach = slope * max(dcols, 1.0) * h * max(abs(col.x), abs(x))
        _connect(b, np.array([node]), np.array([y]), col, base, reach)


_DEFAULT_GRID = GridOracle()


def grid_distance(p, q, resolution: float | None = None, *,
                  oracle: GridOracle | None = None) -> OracleResult:
    """Grid shortest-path distance with the default window and given resolution."""
    if oracle is None:
        oracle = _DEFAULT_GRID if resolution is None else _grid_for(resolution)
    return oracle.distance(p, q)


@lru_cache(maxsize=16)
def _grid_for(resolution: float) -> GridOracle:
    return GridOracle(resolution=resolution)


def oracle_distance(p, q, tol: float = 1e-6) -> OracleResult:
    """Shooting with grid fallback on non-convergence."""
    try:
        return shooting_distance(p, q, tol)
    except NoConvergence:
        p, q = _as_point(p), _as_point(q)
        return GridOracle(window=_window_of(p, q)).distance(p, q)


def _window_of(p: Point, q: Point) -> tuple[float, float, float, float]:
    return (min(p.x, q.x), max(p.x, q.x), min(p.y, q.y), max(p.y, q.y))
