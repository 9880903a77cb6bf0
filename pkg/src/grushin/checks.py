"""Named invariant checks for every module, registered with the harness.

Each check takes the configuration and a per-run context dict (used to share
expensive intermediate results between checks) and returns a
:class:`~grushin.harness.CheckResult`.
"""

from __future__ import annotations

import math

import numpy as np

from .embedding import embed_F, extend_g, g_offset, grad_g, local_chart, map_H
from .geodesic import GridOracle, shooting_distance
from .harness import (
    CHECKS,
    DESIGNATED,
    STRATA,
    CheckResult,
    Config,
    SampleSpec,
    _check,
    _draw_point,
    _result,
    attribution_floor,
    compare_baselines,
    load_baselines,
    make_coloring,
    make_embedding,
    report_constants,
    required_band,
    run_distortion,
)
from .line import embed_line, holder_bound, line_difference, measure_line_distortion
from .metric import Point, curve_length, dilate, distance_bounds
from .partition import active_set, bump, bump_from_sets, hull, phi
from .whitney import (
    WhitneyBox,
    box_containing,
    brute_force_wball,
    greedy_coloring,
    star,
    verify_coloring,
    wball,
    wball_count,
)

#: Names every run must report; the completeness check compares against this list.
EXPECTED = (
    "metric.kappa_in_bounds", "metric.homogeneity", "metric.sandwich", "metric.horizontal_exactness",
    "metric.curve_length_above_oracle",
    "geodesic.cross_oracle", "geodesic.bound_containment", "geodesic.symmetry", "geodesic.triangle",
    "geodesic.dilation", "geodesic.kappa",
    "line.anchoring", "line.holder_upper", "line.ratio_min_positive", "line.band_stability",
    "line.scale_stability", "line.determinism", "line.band_coverage",
    "whitney.cover_disjoint", "whitney.star_symmetry", "whitney.property3", "whitney.lattice_equivariance",
    "whitney.wball_invariance", "whitney.wball_touching_limit", "whitney.wball_growth",
    "whitney.coloring_proper", "whitney.greedy_reference",
    "partition.unity", "partition.support", "partition.lower_bound", "partition.lipschitz",
    "partition.locality", "partition.overlap",
    "embedding.restriction", "embedding.dimension", "embedding.g_lipschitz", "embedding.grad_claim",
    "embedding.grad_richardson", "embedding.chart_annulus", "embedding.chart_bound", "embedding.slot_count",
    "embedding.distortion_finite", "embedding.dilation_stability", "embedding.case_coverage",
    "embedding.component_attribution", "embedding.H_colipschitz",
    "harness.determinism", "harness.skip_accounting", "harness.completeness", "harness.baselines",
)

CHECK_PAIRS = 400


def _rng(tag: int) -> np.random.Generator:
    return np.random.default_rng(tag)


def _uniform_pairs(cfg: Config, n: int, seed: int) -> list[tuple[Point, Point]]:
    x0, y0, x1, y1 = cfg.window
    rng = _rng(seed)
    xy = rng.uniform([x0, y0, x0, y0], [x1, y1, x1, y1], size=(n, 4))
    return [(Point(a, b), Point(c, d)) for a, b, c, d in xy]


def _shooting(ctx: dict, cfg: Config) -> list:
    if "shooting" not in ctx:
        pairs = _uniform_pairs(cfg, 200, 101)
        ctx["shooting"] = [(p, q, shooting_distance(p, q, cfg.shooting_tol).distance) for p, q in pairs]
    return ctx["shooting"]


def _grid_oracle(cfg: Config) -> GridOracle:
    x0, y0, x1, y1 = cfg.window
    return GridOracle(window=(x0, x1, y0, y1), resolution=cfg.grid_resolution)


def _grid(ctx: dict, cfg: Config) -> list:
    if "grid" not in ctx:
        oracle = _grid_oracle(cfg)
        ctx["grid"] = [(p, q, s, oracle.distance(p, q).distance) for p, q, s in _shooting(ctx, cfg)[:60]]
    return ctx["grid"]


def _constants(ctx: dict, cfg: Config) -> dict:
    if "constants" not in ctx:
        ctx["constants"] = report_constants(cfg)
    return ctx["constants"]


def _reports(ctx: dict, cfg: Config) -> dict:
    if "reports" not in ctx:
        spec = SampleSpec(cfg.window, CHECK_PAIRS, 0, "case-stratified")
        ctx["reports"] = {lam: run_distortion(spec.dilated(lam), cfg) for lam in (1.0, 2.0, 4.0)}
    return ctx["reports"]


# --------------------------------------------------------------------------
# metric_core


@_check("metric.kappa_in_bounds")
def _kappa_in_bounds(cfg, ctx):
    b = distance_bounds(Point(0.0, 0.0), Point(0.0, 1.0))
    return _result("", cfg.kappa in b, cfg.kappa, f"bracket [{b.lo}, {b.hi}]")


@_check("metric.homogeneity")
def _homogeneity(cfg, ctx):
    worst = 0.0
    for p, q in _uniform_pairs(cfg, 500, 102):
        b = distance_bounds(p, q)
        for lam in (0.5, 2.0, 4.0):
            c = distance_bounds(dilate(p, lam), dilate(q, lam))
            for u, v in ((c.lo, lam * b.lo), (c.hi, lam * b.hi)):
                if v > 0:
                    worst = max(worst, abs(u - v) / v)
    return _result("", worst <= 1e-12, worst, "max relative deviation of dilated bounds")


@_check("metric.sandwich")
def _sandwich(cfg, ctx):
    bad = [(p, q, d) for p, q, d in _shooting(ctx, cfg)
           if not distance_bounds(p, q).lo - 1e-9 <= d <= distance_bounds(p, q).hi + 1e-9]
    return _result("", not bad, len(bad), "pairs outside the closed-form bracket")


@_check("metric.horizontal_exactness")
def _horizontal(cfg, ctx):
    x0, y0, x1, y1 = cfg.window
    rng = _rng(103)
    worst = 0.0
    for _ in range(50):
        a, b, y = rng.uniform(x0, x1), rng.uniform(x0, x1), rng.uniform(y0, y1)
        d = shooting_distance(Point(a, y), Point(b, y), cfg.shooting_tol).distance
        worst = max(worst, abs(d - abs(a - b)))
    return _result("", worst <= cfg.shooting_tol, worst, "max |d - |dx|| on equal-y pairs")


@_check("metric.curve_length_above_oracle")
def _curve_length(cfg, ctx):
    rng = _rng(104)
    worst = -math.inf
    for p, q, d in _shooting(ctx, cfg)[:100]:
        inner = [Point(p.x + t * (q.x - p.x) + 0.3 * rng.standard_normal() * abs(p.x),
                       p.y + t * (q.y - p.y) + 0.3 * rng.standard_normal() * p.x * p.x)
                 for t in sorted(rng.random(int(rng.integers(1, 4))))]
        length = curve_length([p, *inner, q])
        worst = max(worst, d - length)
    return _result("", worst <= cfg.shooting_tol, worst, "max (oracle - polyline length)")


# --------------------------------------------------------------------------
# geodesic_oracle


@_check("geodesic.cross_oracle")
def _cross_oracle(cfg, ctx):
    gaps = [abs(s - g) / g for _, _, s, g in _grid(ctx, cfg) if g > 0]
    worst = max(gaps)
    return _result("", worst <= 0.02, worst, f"max relative gap over {len(gaps)} pairs")


@_check("geodesic.bound_containment")
def _bound_containment(cfg, ctx):
    bad = 0
    for p, q, s, g in _grid(ctx, cfg):
        b = distance_bounds(p, q)
        bad += int(not b.lo - 1e-9 <= s <= b.hi + 1e-9) + int(not b.lo - 1e-9 <= g <= b.hi + 1e-9)
    return _result("", bad == 0, bad, "oracle values outside the bracket")


@_check("geodesic.symmetry")
def _symmetry(cfg, ctx):
    worst = max(abs(d - shooting_distance(q, p, cfg.shooting_tol).distance)
                for p, q, d in _shooting(ctx, cfg)[:100])
    return _result("", worst <= 3 * cfg.shooting_tol, worst, "max |d(p,q) - d(q,p)|")


@_check("geodesic.triangle")
def _triangle(cfg, ctx):
    pts = _uniform_pairs(cfg, 150, 105)
    worst = -math.inf
    for i in range(100):
        p, q = pts[i]
        r = pts[i + 50][0]
        d = lambda a, b: shooting_distance(a, b, cfg.shooting_tol).distance  # noqa: E731
        worst = max(worst, d(p, r) - d(p, q) - d(q, r))
    return _result("", worst <= 3 * cfg.shooting_tol, worst, "max d(p,r) - d(p,q) - d(q,r)")


@_check("geodesic.dilation")
def _dilation(cfg, ctx):
    worst = 0.0
    for p, q, d in _shooting(ctx, cfg)[:100]:
        for lam in (0.5, 2.0):
            dl = shooting_distance(dilate(p, lam), dilate(q, lam), cfg.shooting_tol).distance
            worst = max(worst, abs(dl - lam * d) / (lam * d))
    return _result("", worst <= 0.02, worst, "max relative deviation from lambda * d")


@_check("geodesic.kappa")
def _kappa(cfg, ctx):
    o, a = Point(0.0, 0.0), Point(0.0, 1.0)
    s = shooting_distance(o, a, cfg.shooting_tol).distance
    g = GridOracle(window=(-2.0, 2.0, -2.0, 2.0), resolution=cfg.grid_resolution).distance(o, a).distance
    worst = max(abs(s - cfg.kappa) / cfg.kappa, abs(g - cfg.kappa) / cfg.kappa)
    return _result("", worst <= 0.01, worst, f"shooting {s:.6f}, grid {g:.6f}")


# --------------------------------------------------------------------------
# singular_embedding


@_check("line.anchoring")
def _anchoring(cfg, ctx):
    v = embed_line(0.0, cfg.cascade)
    return _result("", bool(np.all(v == 0.0)), float(np.abs(v).max()), "f(0)")


@_check("line.holder_upper")
def _holder(cfg, ctx):
    rng = _rng(106)
    p = cfg.cascade
    delta = np.power(4.0, rng.uniform(p.j_min, p.j_max, 1000))
    t = rng.uniform(-2.0, 2.0, 1000)
    diff = np.linalg.norm(line_difference(t + delta, t, p), axis=-1)
    excess = float(np.max(diff / holder_bound(delta, p)))
    return _result("", excess <= 1.0 + 1e-12, excess, "max |f(s)-f(t)| / summed bound")


def _line(ctx, cfg):
    if "line" not in ctx:
        ctx["line"] = measure_line_distortion(cfg.cascade, c=cfg.constants)
    return ctx["line"]


@_check("line.ratio_min_positive")
def _line_ratio_min(cfg, ctx):
    d = _line(ctx, cfg)
    return _result("", d.ratio_min > 0, d.ratio_min, f"L_measured {d.L_measured:.4f}")


@_check("line.band_stability")
def _band_stability(cfg, ctx):
    d = _line(ctx, cfg)
    inner = [v for j, v in d.per_band.items() if cfg.j_min + 2 <= j <= cfg.j_max - 2]
    med = np.array([v[1] for v in inner])
    spread = float(med.max() / med.min() - 1.0)
    return _result("", spread < 0.2, spread, f"relative spread of per-band medians over {len(inner)} bands")


@_check("line.scale_stability")
def _scale_stability(cfg, ctx):
    p = cfg.cascade
    js = np.arange(p.j_min + 2, p.j_max - 1)
    s = np.power(4.0, js)
    r = np.linalg.norm(line_difference(s, np.zeros_like(s), p), axis=-1) / (cfg.kappa * np.sqrt(s))
    spread = float(r.max() / r.min())
    return _result("", spread <= 1.2, spread, "max/min ratio over pairs (0, 4^j)")


@_check("line.determinism")
def _line_determinism(cfg, ctx):
    a = measure_line_distortion(cfg.cascade, c=cfg.constants)
    return _result("", a == _line(ctx, cfg), None, "repeat measurement identical")


@_check("line.band_coverage")
def _band_coverage(cfg, ctx):
    lo, hi = required_band(cfg.window)
    ok = cfg.j_min <= lo and cfg.j_max >= hi
    detail = (f"scale band [{cfg.j_min}, {cfg.j_max}] covers required [{lo}, {hi}]" if ok else
              f"scale band [{cfg.j_min}, {cfg.j_max}] does not cover [{lo}, {hi}] "
              f"needed for window {cfg.window}")
    return _result("", ok, None, detail)


# --------------------------------------------------------------------------
# whitney


@_check("whitney.cover_disjoint")
def _cover(cfg, ctx):
    rng = _rng(107)
    bad = 0
    for _ in range(10_000):
        p = _draw_point(rng, cfg.window)
        if p is None:
            continue
        Q = box_containing(p, cfg.level_range)
        bad += not Q.contains(p)
        bad += sum(R.contains(p) for R in star(Q) if R != Q)
    return _result("", bad == 0, bad, "points outside their box or inside a second box")


def _sample_boxes(n: int, seed: int) -> list[WhitneyBox]:
    rng = _rng(seed)
    return [WhitneyBox(int(rng.choice([-1, 1])), int(rng.integers(-4, 9)), int(rng.integers(-500, 500)))
            for _ in range(n)]


@_check("whitney.star_symmetry")
def _star_symmetry(cfg, ctx):
    bad = sum(Q not in star(R) for Q in _sample_boxes(200, 108) for R in star(Q))
    return _result("", bad == 0, bad, "asymmetric star memberships")


@_check("whitney.property3")
def _property3(cfg, ctx):
    worst = 0.0
    boxes = 0
    for n in range(-4, 9):
        b = 16 * 4 ** abs(n)
        k = np.arange(-b, b + 1, dtype=np.float64)
        s, h = math.ldexp(1.0, -n), math.ldexp(1.0, -2 * n)
        dy = (k + 1) * h - k * h
        hi = np.maximum(4.0 * s, 4.0 * (s + np.sqrt(dy)))
        dist = s  # exact, attained by a horizontal segment
        if np.any(hi < dist):
            return _result("", False, None, f"diam upper below dist at level {n}")
        worst = max(worst, float(np.max(hi / dist)))
        boxes += 2 * k.size
    return _result("", worst <= 8.0, worst, f"max diam_hi / dist over {boxes} boxes")


def _pattern(Q: WhitneyBox, members) -> frozenset:
    out = set()
    for R in members:
        d = R.n - Q.n
        base = Q.k * 4 ** d if d >= 0 else Q.k // 4 ** (-d)
        out.add((R.side * Q.side, d, R.k - base))
    return frozenset(out)


@_check("whitney.lattice_equivariance")
def _lattice(cfg, ctx):
    bad = 0
    for Q in _sample_boxes(50, 109):
        ref = _pattern(Q, star(Q))
        for R in (WhitneyBox(Q.side, Q.n + 3, Q.k), WhitneyBox(Q.side, Q.n, Q.k + 64 * 7),
                  WhitneyBox(-Q.side, Q.n, Q.k)):
            bad += _pattern(R, star(R)) != ref
    return _result("", bad == 0, bad, "star offset patterns changed by n-shift, k-translation or mirror")


@_check("whitney.wball_invariance")
def _wball_invariance(cfg, ctx):
    tau = min(cfg.tau, 8.0)
    size = wball_count(tau)
    bad = 0
    for Q in _sample_boxes(6, 110):
        W = wball(Q, tau)
        bad += len(W) != size
        bad += not brute_force_wball(Q, tau) <= W
    return _result("", bad == 0, size, f"W-ball size at tau={tau}; brute force contained")


@_check("whitney.wball_touching_limit")
def _wball_touching(cfg, ctx):
    bad = 0
    for Q in _sample_boxes(20, 111):
        S = star(Q)
        bad += brute_force_wball(Q, 1e-9) != S or not S <= wball(Q, 1e-9)
    return _result("", bad == 0, bad, "vanishing-radius W-balls not matching the star")


@_check("whitney.wball_growth")
def _wball_growth(cfg, ctx):
    taus = 2.0 ** np.arange(2, 9)
    counts = np.array([wball_count(t) for t in taus], dtype=float)
    x = taus ** 2 * np.log2(taus) ** 2
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, counts, rcond=None)
    resid = counts - A @ coef
    r2 = 1.0 - float(resid @ resid) / float(((counts - counts.mean()) ** 2).sum())
    return _result("", r2 >= 0.95, r2, "R^2 of counts against tau^2 log^2 tau over tau = 4..256")


@_check("whitney.coloring_proper")
def _coloring_proper(cfg, ctx):
    res = verify_coloring(make_coloring(cfg), cfg.tau, max_violations=1000)
    detail = f"{res['candidate_pairs']} candidate pairs checked"
    if res["truncated"]:
        detail += "; stopped after the first 1000 conflicts"
    if not res["proper"]:
        detail += f"; first conflict {res['example'][0].label()} / {res['example'][1].label()}"
    return _result("", res["proper"], res["violations"], detail)


@_check("whitney.greedy_reference")
def _greedy(cfg, ctx):
    coloring = make_coloring(cfg)
    boxes = [WhitneyBox(s, n, k) for s in (1, -1) for n in range(0, 3) for k in range(-4 ** n * 2, 4 ** n * 2)]
    greedy, edges = greedy_coloring(boxes, cfg.tau)
    clashes = sum(coloring.color(boxes[i]) == coloring.color(boxes[j]) for i, j in edges)
    greedy_ok = all(greedy[boxes[i]] != greedy[boxes[j]] for i, j in edges)
    n_greedy = len(set(greedy.values()))
    return _result("", clashes == 0 and greedy_ok, clashes,
                   f"{len(edges)} conflict edges; greedy uses {n_greedy} colors, periodic M={coloring.M}")


# --------------------------------------------------------------------------
# partition


def _points(cfg: Config, n: int, seed: int) -> list[Point]:
    rng = _rng(seed)
    out = []
    while len(out) < n:
        p = _draw_point(rng, cfg.window)
        if p is not None:
            out.append(p)
    return out


@_check("partition.unity")
def _unity(cfg, ctx):
    worst = max(abs(float(active_set(p, cfg.level_range).phi.sum()) - 1.0) for p in _points(cfg, 10_000, 112))
    return _result("", worst <= 1e-12, worst, "max |sum phi - 1|")


def _neighbourhood(p: Point) -> list[WhitneyBox]:
    Q = box_containing(p)
    out = []
    for d in range(-3, 4):
        n = Q.n + d
        base = Q.k * 4 ** d if d >= 0 else Q.k // 4 ** (-d)
        span = 40 * 4 ** max(d, 0)
        out.extend(WhitneyBox(Q.side, n, base + j) for j in range(-span, span + 1))
    return out


def _in_hull(p: Point, Q: WhitneyBox, second: bool) -> bool:
    (x0, x1), (y0, y1) = hull(Q, second)
    return x0 <= p.x <= x1 and y0 <= p.y <= y1


@_check("partition.support")
def _support(cfg, ctx):
    bad = 0
    for p in _points(cfg, 40, 113):
        active = set(active_set(p).boxes())
        for Q in _neighbourhood(p):
            b = bump(Q, p)
            bad += (b > 0) != (Q in active)
            bad += b > 0 and not _in_hull(p, Q, True)
    return _result("", bad == 0, bad, "support mismatches around sampled points")


@_check("partition.lower_bound")
def _lower_bound(cfg, ctx):
    C1 = _constants(ctx, cfg)["C1"]
    rng = _rng(114)
    worst = math.inf
    for Q in _sample_boxes(300, 115):
        (x0, x1), (y0, y1) = hull(Q)
        p = Point(rng.uniform(x0, x1), rng.uniform(y0, y1))
        worst = min(worst, phi(Q, p))
    return _result("", worst >= 1.0 / C1, worst, f"min phi on star hulls vs 1/C1 = {1.0 / C1:.5f}")


@_check("partition.lipschitz")
def _lipschitz(cfg, ctx):
    C2 = _constants(ctx, cfg)["C2"]
    return _result("", math.isfinite(C2) and C2 > 0, C2, "measured Lipschitz factor C2")


@_check("partition.locality")
def _locality(cfg, ctx):
    worst = 0.0
    for p in _points(cfg, 40, 116):
        s = active_set(p)
        boxes = s.boxes()
        raw = np.array([bump_from_sets(Q, p) for Q in boxes])
        worst = max(worst, float(np.abs(raw / raw.sum() - s.phi).max()))
    return _result("", worst <= 1e-12, worst, "phi from the truncated universe of active boxes")


@_check("partition.overlap")
def _overlap(cfg, ctx):
    C3 = _constants(ctx, cfg)["C3"]
    worst = max(len(active_set(p)) for p in _points(cfg, 3000, 117))
    return _result("", worst <= C3, worst, f"max active boxes on fresh points vs C3 = {C3}")


# --------------------------------------------------------------------------
# embedding


@_check("embedding.restriction")
def _restriction(cfg, ctx):
    emb = make_embedding(cfg)
    bad = 0
    for y in _rng(118).uniform(cfg.window[1], cfg.window[3], 100):
        v = embed_F(Point(0.0, y), emb)
        bad += not (np.array_equal(v.g_part, embed_line(y, emb.cascade)) and not v.H_part and v.dist_part == 0.0)
        bad += not np.array_equal(extend_g(Point(0.0, y), emb), embed_line(y, emb.cascade))
    return _result("", bad == 0, bad, "line points where F differs from (f, 0, 0)")


@_check("embedding.dimension")
def _dimension(cfg, ctx):
    emb = make_embedding(cfg)
    v = embed_F(Point(0.7, 0.3), emb).to_dense()
    return _result("", v.size == 2 * emb.M + 4, v.size, f"2M+4 with M={emb.M}")


def _local_pairs(cfg: Config, n: int, seed: int) -> list[tuple[Point, Point]]:
    rng = _rng(seed)
    out = []
    for p in _points(cfg, n, seed):
        s = abs(p.x) * 2.0 ** rng.uniform(-6, 2)
        q = Point(p.x + s * rng.uniform(-1, 1), p.y + s * (abs(p.x) + s) * rng.uniform(-1, 1))
        if q.x * p.x > 0:
            out.append((p, q))
    return out


@_check("embedding.g_lipschitz")
def _g_lipschitz(cfg, ctx):
    emb = make_embedding(cfg)
    L = _constants(ctx, cfg)["L_measured"]
    worst = 0.0
    for p, q in _local_pairs(cfg, 1000, 119):
        d = shooting_distance(p, q, cfg.shooting_tol).distance
        dg = g_offset(p, p.y, emb) - g_offset(q, p.y, emb)
        worst = max(worst, float(np.linalg.norm(dg)) / (L * d))
    ctx["g_lipschitz"] = worst
    return _result("", math.isfinite(worst), worst, "C = max |g(p)-g(q)| / (L d)")


@_check("embedding.grad_claim")
def _grad_claim(cfg, ctx):
    emb = make_embedding(cfg)
    L = _constants(ctx, cfg)["L_measured"]
    worst = max(max(grad_g(p, emb)) for p in _points(cfg, 300, 120)) / L
    return _result("", math.isfinite(worst), worst, "max |X_i g| / L")


@_check("embedding.grad_richardson")
def _grad_richardson(cfg, ctx):
    emb = make_embedding(cfg)
    worst = 0.0
    for p in _points(cfg, 100, 121):
        a = np.array(grad_g(p, emb, 1e-6))
        b = np.array(grad_g(p, emb, 5e-7))
        worst = max(worst, float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-12))))
    return _result("", worst <= 0.05, worst, "max relative change under eps -> eps/2")


@_check("embedding.chart_annulus")
def _chart_annulus(cfg, ctx):
    M1 = _constants(ctx, cfg)["M1"]
    return _result("", M1 <= 10.0, M1, "|chart(p)| / scale within [1/M1, M1] on star hulls")


@_check("embedding.chart_bound")
def _chart_bound(cfg, ctx):
    rng = _rng(122)
    r = []
    for Q in _sample_boxes(1000, 123):
        (x0, x1), (y0, y1) = hull(Q)
        p = Point(rng.uniform(x0, x1), rng.uniform(y0, y1))
        q = Point(rng.uniform(x0, x1), rng.uniform(y0, y1))
        d = shooting_distance(p, q, cfg.shooting_tol).distance
        r.append(float(np.linalg.norm(local_chart(Q, p) - local_chart(Q, q))) / d)
    spread = max(r) / min(r)
    return _result("", spread <= 24.0, spread, f"c_hi/c_lo with c_lo={min(r):.4f}, c_hi={max(r):.4f}")


@_check("embedding.slot_count")
def _slot_count(cfg, ctx):
    emb = make_embedding(cfg)
    C3 = _constants(ctx, cfg)["C3"]
    worst = max(len(map_H(p, emb)) for p in _points(cfg, 10_000, 124))
    return _result("", worst <= C3, worst, f"max nonzero color slots vs C3 = {C3}")


@_check("embedding.distortion_finite")
def _distortion_finite(cfg, ctx):
    rep = _reports(ctx, cfg)[1.0]
    ok = rep.ratio_min is not None and rep.ratio_min > 0 and math.isfinite(rep.ratio_max)
    return _result("", ok, rep.ratio_min, f"ratios in [{rep.ratio_min}, {rep.ratio_max}]")


@_check("embedding.dilation_stability")
def _dilation_stability(cfg, ctx):
    reps = _reports(ctx, cfg)
    base = reps[1.0]
    worst = 0.0
    for lam in (2.0, 4.0):
        for key in ("ratio_min", "ratio_max"):
            a, b = getattr(base, key), getattr(reps[lam], key)
            worst = max(worst, abs(b - a) / a)
    return _result("", worst <= 0.15, worst, "max relative change of ratio min/max under delta_2, delta_4")


@_check("embedding.case_coverage")
def _case_coverage(cfg, ctx):
    rep = _reports(ctx, cfg)[1.0]
    ok = all(v["count"] > 0 and v["min"] > 0 for v in rep.per_stratum.values())
    detail = ", ".join(f"{s}: {v['count']} (min {v['min']:.4g})" for s, v in rep.per_stratum.items())
    return _result("", ok, min(v["count"] for v in rep.per_stratum.values()), detail)


@_check("embedding.component_attribution")
def _attribution(cfg, ctx):
    floor = attribution_floor(cfg.tau)
    worst = math.inf
    parts = []
    for lam, rep in _reports(ctx, cfg).items():
        for s in STRATA:
            v = rep.attribution[s][DESIGNATED[s]]
            worst = min(worst, v / floor)
            if lam == 1.0:
                parts.append(f"{s}:{DESIGNATED[s]}={v:.4g}")
    return _result("", worst >= 1.0, worst, f"floor {floor:.4g}; " + ", ".join(parts))


@_check("embedding.H_colipschitz")
def _h_colipschitz(cfg, ctx):
    rep = _reports(ctx, cfg)[1.0]
    c = min(rep.attribution[s]["H"] for s in ("i", "ii"))
    return _result("", c > 0, c, "min |H(p)-H(q)| / d over W-local pairs")


# --------------------------------------------------------------------------
# harness


@_check("harness.determinism")
def _determinism(cfg, ctx):
    spec = SampleSpec(cfg.window, 24, 7, "case-stratified")
    a = run_distortion(spec, cfg).to_json()
    b = run_distortion(spec, cfg).to_json()
    c = run_distortion(spec, Config(**{**cfg.to_dict(), "workers": 2})).to_json()
    return _result("", a == b == c, None, "repeat and two-worker reports byte-identical")


@_check("harness.skip_accounting")
def _skip_accounting(cfg, ctx):
    rep = _reports(ctx, cfg)[1.0]
    counted = sum(v["count"] for v in rep.per_stratum.values())
    ok = counted + rep.excluded + len(rep.skipped) == rep.n_pairs
    return _result("", ok, len(rep.skipped), f"{counted} measured, {rep.excluded} excluded, {len(rep.skipped)} skipped")


@_check("harness.completeness")
def _completeness(cfg, ctx):
    registered = {name for name, _ in CHECKS}
    missing = [n for n in EXPECTED if n not in registered]
    return _result("", not missing, len(missing), "missing: " + ", ".join(missing) if missing else "all invariants registered")


def measured_for_baseline(cfg: Config, ctx: dict | None = None) -> dict:
    """The quantities pinned by the regression baselines."""
    ctx = {} if ctx is None else ctx
    c = _constants(ctx, cfg)
    rep = _reports(ctx, cfg)[1.0]
    out = {k: c[k] for k in ("kappa", "L_measured", "M", "wball_size", "C2", "C3", "M1")}
    out["ratio_min"] = rep.ratio_min
    out["ratio_max"] = rep.ratio_max
    for s in STRATA:
        out[f"stratum_{s}_min"] = rep.per_stratum[s]["min"]
    return out


@_check("harness.baselines")
def _baselines(cfg, ctx):
    base = load_baselines(ctx.get("baseline_path"))
    ref = {k: (tuple(v) if isinstance(v, list) else v) for k, v in base["config"].items()}
    if Config(**{**ref, "workers": cfg.workers}) != cfg:
        return CheckResult("", "skip", None, "configuration differs from the baseline configuration")
    rows = compare_baselines(measured_for_baseline(cfg, ctx), base)
    bad = [f"{name}={value!r} ({detail})" for name, ok, value, detail in rows if not ok]
    return _result("", not bad, len(bad), "; ".join(bad) if bad else f"{len(rows)} values within tolerance")


#: Relative tolerances for the pinned quantities; combinatorial values are exact.
BASELINE_TOLERANCES = {
    "kappa": 1e-12, "M": 0.0, "wball_size": 0.0, "C3": 0.0,
    "L_measured": 1e-6, "C2": 1e-6, "M1": 1e-6,
    "ratio_min": 0.02, "ratio_max": 0.02,
    **{f"stratum_{s}_min": 0.02 for s in STRATA},
}


def write_baselines(path, cfg: Config) -> dict:
    """Measure the pinned quantities under ``cfg`` and write them with their tolerances."""
    import json

    values = measured_for_baseline(cfg)
    doc = {
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.to_dict().items() if k != "workers"},
        "values": {k: {"value": v, "rel_tol": BASELINE_TOLERANCES[k]} for k, v in sorted(values.items())},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc
