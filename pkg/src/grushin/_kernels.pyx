# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: segment lengths for the grid oracle and geodesic shooting.

Mirrors ``_kernels_py`` function for function.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, M_PI, asin, fabs, hypot, isnan, log1p, sin
from scipy.optimize.cython_optimize cimport brentq

cnp.import_array()

BACKEND = "cython"

cdef double TWO_PI = 2.0 * M_PI
cdef double EPS = 2.220446049250313e-16


def segment_lengths(x1, y1, x2, y2):
    """Riemannian lengths of straight segments, closed form (see ``_kernels_py``)."""
    bx1, by1, bx2, by2 = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (x1, y1, x2, y2)))
    shape = bx1.shape
    cdef const double[::1] X1 = np.ascontiguousarray(bx1).ravel()
    cdef const double[::1] Y1 = np.ascontiguousarray(by1).ravel()
    cdef const double[::1] X2 = np.ascontiguousarray(bx2).ravel()
    cdef const double[::1] Y2 = np.ascontiguousarray(by2).ravel()
    cdef Py_ssize_t n = X1.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double dx, dy, a, b, d, m, ha, hb, dh
    with nogil:
        for i in range(n):
            dx = X2[i] - X1[i]
            dy = Y2[i] - Y1[i]
            if dy == 0.0:
                o[i] = fabs(dx)
            elif X1[i] == 0.0 or X2[i] == 0.0 or ((X1[i] < 0.0) != (X2[i] < 0.0)):
                o[i] = INFINITY
            elif dx == 0.0:
                o[i] = fabs(dy / X1[i])
            else:
                a = fabs(X1[i])
                b = fabs(X2[i])
                if a > b:
                    a, b = b, a
                d = fabs(dx)
                m = fabs(dy) / d
                ha = hypot(a, m)
                hb = hypot(b, m)
                dh = d * (a + b) / (ha + hb)
                o[i] = dh + m * (log1p(d / a) + log1p(-dh / (m + hb)))
    return out.reshape(shape)


cdef inline double _s_minus_sin(double s) noexcept nogil:
    cdef double s2
    if fabs(s) < 1e-3:
        s2 = s * s
        return s * s2 * (1.0 / 6.0 - s2 / 120.0 + s2 * s2 / 5040.0)
    return s - sin(s)


cdef inline double _branch_s(double eps, double r, int kind, int m) noexcept nogil:
    cdef double v = r * sin(eps)
    if v > 1.0:
        v = 1.0
    elif v < -1.0:
        v = -1.0
    cdef double a = asin(v)
    if kind == 0:
        return eps - a + TWO_PI * m
    return a + eps - M_PI + TWO_PI * m


cdef inline double _rise(double eps, double s) noexcept nogil:
    if s <= 0.0:
        return 0.0
    cdef double se = sin(eps)
    cdef double h = sin(eps - 0.5 * s)
    return 0.5 * (_s_minus_sin(s) + 2.0 * sin(s) * h * h) / (se * se)


ctypedef struct _Args:
    double r
    double target
    int kind
    int m


cdef double _residual(double eps, void *args) noexcept nogil:
    cdef _Args *a = <_Args *> args
    return _rise(eps, _branch_s(eps, a.r, a.kind, a.m)) - a.target


def shoot(double r, double target, eps_grid, int max_arcs):
    """Shortest normal geodesic from (1, 0) to (r, target); see ``_kernels_py.shoot``."""
    cdef const double[::1] grid = np.ascontiguousarray(eps_grid, dtype=np.float64)
    cdef Py_ssize_t n = grid.shape[0], i
    cdef _Args args
    cdef double best_len = INFINITY, best_eps = float("nan"), best_res = float("nan")
    cdef int best_kind = -1, best_m = -1, n_roots = 0
    cdef double f_prev, f_cur, root, s, length
    cdef int kind, m, b
    args.r = r
    args.target = target
    with nogil:
        for b in range(2 * max_arcs - 1):
            # phase order: B0 < A1 < B1 < A2 < ...
            if b == 0:
                kind, m = 0, 0
            else:
                kind = 1 if b % 2 == 1 else 0
                m = (b + 1) // 2
            args.kind = kind
            args.m = m
            f_prev = _residual(grid[0], &args)
            for i in range(1, n):
                f_cur = _residual(grid[i], &args)
                if (f_prev > 0.0) != (f_cur > 0.0):
                    root = brentq(_residual, grid[i - 1], grid[i], &args, 1e-16, 4.0 * EPS, 200, NULL)
                    if not isnan(root):
                        s = _branch_s(root, r, kind, m)
                        if s > 0.0:
                            n_roots += 1
                            length = s / sin(root)
                            if length < best_len:
                                best_len = length
                                best_eps = root
                                best_kind = kind
                                best_m = m
                                best_res = _residual(root, &args)
                f_prev = f_cur
    return best_len, best_eps, best_kind, best_m, best_res, n_roots
