"""The bi-Lipschitz embedding ``F = (g, H, dist(., A))``.

* ``g`` extends the line embedding ``f`` off the line by averaging ``f`` at the
  nearest singular points ``z_Q`` with the partition of unity.
* ``H`` places the rescaled local chart of every active box, weighted by
  ``phi_Q``, into the R^2 slot of the box's color.
* ``|x|`` is the exact distance to the line.

``H`` has ``2M`` coordinates but at most ``C3`` nonzero slots at any point,
so it is kept as a sparse map from color to vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .line import CascadeParams, embed_line, line_increment
from .metric import Point, _as_point
from .partition import ActiveSet, active_set
from .whitney import LEVEL_RANGE, Coloring, LevelRangeError, WhitneyBox, build_coloring

__all__ = [
    "Embedding",
    "EmbeddedVector",
    "PairDifference",
    "extend_g",
    "g_offset",
    "grad_g",
    "local_chart",
    "map_H",
    "embed_F",
    "pair_difference",
]


@dataclass(frozen=True)
class Embedding:
    """Immutable bundle of everything ``F`` depends on."""

    coloring: Coloring = field(default_factory=lambda: build_coloring(8.0))
    cascade: CascadeParams = field(default_factory=CascadeParams)
    level_range: tuple[int, int] = LEVEL_RANGE

    @property
    def M(self) -> int:
        return self.coloring.M

    @property
    def dimension(self) -> int:
        return 2 * self.M + 4


@dataclass(frozen=True)
class EmbeddedVector:
    g_part: np.ndarray
    H_part: dict
    dist_part: float
    M: int

    @property
    def dimension(self) -> int:
        return 2 * self.M + 4

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dimension)
        out[:3] = self.g_part
        for c, vec in self.H_part.items():
            out[3 + 2 * (c - 1): 3 + 2 * c] = vec
        out[-1] = self.dist_part
        return out

    def to_dict(self) -> dict:
        return {
            "g": [float(v) for v in self.g_part],
            "H": {str(c): [float(v) for v in vec] for c, vec in sorted(self.H_part.items())},
            "dist": self.dist_part,
            "dimension": self.dimension,
        }


def _check_level(p: Point, level_range: tuple[int, int]) -> None:
    if p.x == 0.0:
        return
    n = 1 - math.frexp(abs(p.x))[1]
    if not level_range[0] <= n <= level_range[1]:
        raise LevelRangeError(f"level {n} of {p} outside {level_range}")


def _chart_y(s: ActiveSet) -> np.ndarray:
    return s.v * np.ldexp(1.0, -(s.n + s.dn))


def g_offset(p, anchor: float, emb: Embedding | None = None, *, active: ActiveSet | None = None) -> np.ndarray:
    """``g(p) - f(anchor)``, accurate when ``p`` is close to ``anchor``."""
    emb = emb or Embedding()
    p = _as_point(p)
    _check_level(p, emb.level_range)
    dy = p.y - anchor
    if p.x == 0.0:
        return line_increment(anchor, dy, emb.cascade)
    s = active if active is not None else active_set(p, emb.level_range)
    inc = line_increment(anchor, dy + s.z_off, emb.cascade)
    return s.phi @ inc


def extend_g(p, emb: Embedding | None = None) -> np.ndarray:
    """``g(p) = sum_Q phi_Q(p) f(z_Q)`` off the line, ``f(y)`` on it."""
    emb = emb or Embedding()
    p = _as_point(p)
    _check_level(p, emb.level_range)
    if p.x == 0.0:
        return embed_line(p.y, emb.cascade)
    return embed_line(p.y, emb.cascade) + g_offset(p, p.y, emb)


def grad_g(p, emb: Embedding | None = None, eps: float = 1e-6) -> tuple[float, float]:
    """Central differences of ``g`` along ``X1 = d/dx`` and ``X2 = x d/dy``.

    Steps are ``eps |x|`` in ``x`` and ``eps x^2`` in ``y`` (one unit of
    ``eps |x|`` along ``X2``).  Returns the largest component magnitude of each
    derivative.
    """
    emb = emb or Embedding()
    p = _as_point(p)
    h = eps * abs(p.x)
    if p.x == 0.0 or h >= abs(p.x):
        raise ValueError(f"finite-difference step at {p} would reach the singular line")
    d1 = (g_offset(Point(p.x + h, p.y), p.y, emb) - g_offset(Point(p.x - h, p.y), p.y, emb)) / (2 * h)
    hy = h * abs(p.x)
    d2 = (g_offset(Point(p.x, p.y + hy), p.y, emb) - g_offset(Point(p.x, p.y - hy), p.y, emb)) / (2 * h)
    return float(np.abs(d1).max()), float(np.abs(d2).max())


def local_chart(Q: WhitneyBox, p) -> np.ndarray:
    """``(x, (y - k 4^-n) / 2^-n)``: the box chart, flattening ``Q`` to unit aspect."""
    p = _as_point(p)
    F = math.ldexp(p.y, 2 * Q.n)
    fl = math.floor(F)
    rel = float(int(fl) - Q.k) + (F - fl)
    return np.array([p.x, math.ldexp(rel, -Q.n)])


def map_H(p, emb: Embedding | None = None, *, active: ActiveSet | None = None) -> dict:
    """Sparse ``H(p)``: color -> ``sum phi_Q(p) chart_Q(p)`` over active boxes of that color."""
    emb = emb or Embedding()
    p = _as_point(p)
    _check_level(p, emb.level_range)
    if p.x == 0.0:
        return {}
    s = active if active is not None else active_set(p, emb.level_range)
    colors = _colors(s, emb.coloring)
    vecs = np.empty((len(s), 2))
    vecs[:, 0] = p.x * s.phi
    vecs[:, 1] = _chart_y(s) * s.phi
    out: dict[int, np.ndarray] = {}
    for c, vec in zip(colors.tolist(), vecs):
        if c in out:
            out[c] = out[c] + vec
        else:
            out[c] = vec
    return out


def _colors(s: ActiveSet, coloring: Coloring) -> np.ndarray:
    P, S = coloring.period_n, coloring.period_k
    side = 0 if s.side > 0 else 1
    return coloring.palette[side, (s.n + s.dn) % P, s.residues(S)]


def embed_F(p, emb: Embedding | None = None) -> EmbeddedVector:
    emb = emb or Embedding()
    p = _as_point(p)
    _check_level(p, emb.level_range)
    if p.x == 0.0:
        return EmbeddedVector(embed_line(p.y, emb.cascade), {}, 0.0, emb.M)
    s = active_set(p, emb.level_range)
    g = embed_line(p.y, emb.cascade) + g_offset(p, p.y, emb, active=s)
    return EmbeddedVector(g, map_H(p, emb, active=s), abs(p.x), emb.M)


@dataclass(frozen=True)
class PairDifference:
    """Norms of the component differences ``F(p) - F(q)``."""

    g: float
    H: float
    dist: float

    @property
    def total(self) -> float:
        return math.sqrt(self.g ** 2 + self.H ** 2 + self.dist ** 2)


def pair_difference(p, q, emb: Embedding | None = None) -> PairDifference:
    """``|F(p) - F(q)|`` by component, with ``g`` anchored at ``p`` for accuracy."""
    emb = emb or Embedding()
    p, q = _as_point(p), _as_point(q)
    sp = active_set(p, emb.level_range) if p.x != 0.0 else None
    sq = active_set(q, emb.level_range) if q.x != 0.0 else None
    dg = g_offset(p, p.y, emb, active=sp) - g_offset(q, p.y, emb, active=sq)
    hp = map_H(p, emb, active=sp) if sp is not None else {}
    hq = map_H(q, emb, active=sq) if sq is not None else {}
    dh2 = 0.0
    for c in hp.keys() | hq.keys():
        d = hp.get(c, 0.0) - hq.get(c, 0.0)
        dh2 += float(np.dot(d, d))
    return PairDifference(float(np.linalg.norm(dg)), math.sqrt(dh2), abs(abs(p.x) - abs(q.x)))
