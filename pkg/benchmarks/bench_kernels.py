"""Compare the compiled and pure-Python kernels: agreement and timing.

Usage: python benchmarks/bench_kernels.py [--segments N] [--shots N] [--json]
"""

from __future__ import annotations

import argparse
import json
import math
import timeit

import numpy as np

from grushin import _kernels_py
from grushin.geodesic import _launch_grid

try:
    from grushin import _kernels
except ImportError:  # pragma: no cover
    _kernels = None


def _segments(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(0.01, 2.0, n) * rng.choice([-1, 1], n)
    x2 = x1 * rng.uniform(0.5, 2.0, n)
    y1 = rng.uniform(-2, 2, n)
    y2 = y1 + rng.normal(0, 0.1, n)
    return x1, y1, x2, y2


def _shots(n: int, seed: int = 1):
    rng = np.random.default_rng(seed)
    r = rng.uniform(-1.0, 1.0, n)
    target = 10.0 ** rng.uniform(-3, 2, n)
    return list(zip(r.tolist(), target.tolist()))


def run(n_segments: int = 200_000, n_shots: int = 300) -> dict:
    if _kernels is None:
        raise SystemExit("compiled kernels are not built; reinstall with Cython available")
    seg = _segments(n_segments)
    shots = _shots(n_shots)
    grid = _launch_grid(64)
    out = {}

    a = _kernels_py.segment_lengths(*seg)
    b = _kernels.segment_lengths(*seg)
    out["segment_lengths"] = {
        "n": n_segments,
        "max_rel_diff": float(np.max(np.abs(a - b) / np.abs(a))),
        "python_s": min(timeit.repeat(lambda: _kernels_py.segment_lengths(*seg), number=1, repeat=3)),
        "cython_s": min(timeit.repeat(lambda: _kernels.segment_lengths(*seg), number=1, repeat=3)),
    }

    diffs = []
    for r, t in shots:
        la = _kernels_py.shoot(r, t, grid, 4)[0]
        lb = _kernels.shoot(r, t, grid, 4)[0]
        if math.isfinite(la) or math.isfinite(lb):
            diffs.append(abs(la - lb) / la)
    out["shoot"] = {
        "n": n_shots,
        "max_rel_diff": float(max(diffs)),
        "python_s": min(timeit.repeat(lambda: [_kernels_py.shoot(r, t, grid, 4) for r, t in shots], number=1, repeat=3)),
        "cython_s": min(timeit.repeat(lambda: [_kernels.shoot(r, t, grid, 4) for r, t in shots], number=1, repeat=3)),
    }
    for v in out.values():
        v["speedup"] = v["python_s"] / v["cython_s"]
    return out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--segments", type=int, default=200_000)
    ap.add_argument("--shots", type=int, default=300)
    ap.add_argument("--json", action="store_true", help="print machine-readable results")
    args = ap.parse_args(argv)
    res = run(args.segments, args.shots)
    if args.json:
        print(json.dumps(res, indent=2, sort_keys=True))
        return
    print(f"{'kernel':16s} {'n':>8s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s} {'max rel diff':>13s}")
    for name, v in res.items():
        print(f"{name:16s} {v['n']:8d} {v['python_s']:10.4f} {v['cython_s']:10.4f} {v['speedup']:8.1f} {v['max_rel_diff']:13.2e}")


if __name__ == "__main__":
    main()
