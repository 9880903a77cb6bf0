"""Pure-Python/numpy implementations of the hot kernels.

Mirrors ``_kernels.pyx`` function for function; selected by ``grushin._backend``
when the compiled module is unavailable or ``GRUSHIN_PURE=1`` is set.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

BACKEND = "python"

_TWO_PI = 2.0 * math.pi


# --------------------------------------------------------------------------
# segment lengths


def segment_lengths(x1, y1, x2, y2) -> np.ndarray:
    """Riemannian lengths of straight segments, closed form.

    With ``a <= b`` the endpoint distances to the axis, ``d = b - a`` and
    slope ``m = |dy| / d``, the length is ``F(b) - F(a)`` for the
    antiderivative ``F(x) = sqrt(x^2 + m^2) - m asinh(m / x)``.  Both
    differences are rewritten without cancellation so nearly vertical
    segments stay accurate.
    """
    x1, y1, x2, y2 = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (x1, y1, x2, y2)))
    shape = x1.shape
    x1, y1, x2, y2 = (v.ravel() for v in (x1, y1, x2, y2))
    dx = x2 - x1
    dy = y2 - y1
    out = np.full(x1.shape, np.inf)
    horiz = dy == 0.0
    touches = (x1 == 0.0) | (x2 == 0.0) | ((x1 < 0.0) != (x2 < 0.0))
    vert = (dx == 0.0) & ~horiz & ~touches
    general = ~(horiz | touches | vert)

    out[horiz] = np.abs(dx[horiz])
    out[vert] = np.abs(dy[vert] / x1[vert])
    u = np.abs(x1[general])
    v = np.abs(x2[general])
    a = np.minimum(u, v)
    b = np.maximum(u, v)
    d = np.abs(dx[general])
    m = np.abs(dy[general]) / d
    ha = np.hypot(a, m)
    hb = np.hypot(b, m)
    dh = d * (a + b) / (ha + hb)
    dasinh = np.log1p(d / a) + np.log1p(-dh / (m + hb))
    out[general] = dh + m * dasinh
    return out.reshape(shape)


# --------------------------------------------------------------------------
# shooting


def _s_minus_sin(s: float) -> float:
    if abs(s) < 1e-3:
        s2 = s * s
        return s * s2 * (1.0 / 6.0 - s2 / 120.0 + s2 * s2 / 5040.0)
    return s - math.sin(s)


def _branch_s(eps: float, r: float, kind: int, m: int) -> float:
    a = math.asin(max(-1.0, min(1.0, r * math.sin(eps))))
    if kind == 0:
        return eps - a + _TWO_PI * m
    return a + eps - math.pi + _TWO_PI * m


def _rise(eps: float, s: float) -> float:
    """Vertical rise of the unit-launch geodesic after phase ``s`` (x0 = 1)."""
    if s <= 0.0:
        return 0.0
    se = math.sin(eps)
    h = math.sin(eps - 0.5 * s)
    return 0.5 * (_s_minus_sin(s) + 2.0 * math.sin(s) * h * h) / (se * se)


def _rise_vec(eps: np.ndarray, s: np.ndarray) -> np.ndarray:
    small = np.abs(s) < 1e-3
    s2 = s * s
    smin = np.where(small, s * s2 * (1.0 / 6.0 - s2 / 120.0 + s2 * s2 / 5040.0), s - np.sin(s))
    h = np.sin(eps - 0.5 * s)
    se = np.sin(eps)
    out = 0.5 * (smin + 2.0 * np.sin(s) * h * h) / (se * se)
    return np.where(s > 0.0, out, 0.0)


def _branch_s_vec(eps: np.ndarray, r: float, kind: int, m: int) -> np.ndarray:
    a = np.arcsin(np.clip(r * np.sin(eps), -1.0, 1.0))
    if kind == 0:
        return eps - a + _TWO_PI * m
    return a + eps - math.pi + _TWO_PI * m


def shoot(r: float, target: float, eps_grid: np.ndarray, max_arcs: int):
    """Shortest normal geodesic from (1, 0) to (r, target), ``|r| <= 1``, ``target > 0``.

    Scans every arc branch over the launch-angle grid, brackets sign changes
    of ``rise - target`` and refines them with Brent's method.  Returns
    ``(length, eps, kind, m, residual, n_roots)``; ``length`` is ``inf`` when
    no branch brackets a root.
    """
    best = (math.inf, math.nan, -1, -1, math.nan, 0)
    n_roots = 0
    for kind, m in _branches(max_arcs):
        s_vals = _branch_s_vec(eps_grid, r, kind, m)
        f = _rise_vec(eps_grid, s_vals) - target
        sign = f > 0.0
        idx = np.nonzero(sign[1:] != sign[:-1])[0]
        for i in idx:
            lo, hi = float(eps_grid[i]), float(eps_grid[i + 1])

            def g(e, kind=kind, m=m):
                return _rise(e, _branch_s(e, r, kind, m)) - target

            try:
                root = brentq(g, lo, hi, xtol=1e-16, rtol=4.0 * np.finfo(float).eps, maxiter=200)
            except ValueError:
                continue
            s = _branch_s(root, r, kind, m)
            if s <= 0.0:
                continue
            n_roots += 1
            length = s / math.sin(root)
            if length < best[0]:
                best = (length, root, kind, m, g(root), n_roots)
    return best[:5] + (n_roots,)


def _branches(max_arcs: int):
    # phase order: B0 < A1 < B1 < A2 < ...
    yield 0, 0
    for m in range(1, max_arcs):
        yield 1, m
        yield 0, m
