"""Sampling, distortion measurement, invariant checks and regression baselines.

Pairs are generated serially from a seeded generator, evaluated independently
(optionally in worker processes) and reduced in generation order, so reports
are byte-identical for a fixed configuration whatever the worker count.
"""

from __future__ import annotations

import configparser
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from importlib import resources
from typing import Callable

import numpy as np

from . import __version__
from .embedding import Embedding, pair_difference
from .geodesic import GridOracle, NoConvergence, shooting_distance
from .line import CascadeParams, L_for_constants, LineSample, band_for_levels, measure_line_distortion
from .metric import KAPPA, MetricConstants, Point
from .whitney import (
    LEVEL_RANGE,
    Coloring,
    LevelRangeError,
    box_containing,
    build_coloring,
    coloring_periods,
    pair_lower,
    star2,
)

__all__ = [
    "STRATA",
    "STRATIFICATIONS",
    "Config",
    "ConfigError",
    "SampleSpec",
    "DistortionReport",
    "CheckResult",
    "parse_config",
    "load_config",
    "make_embedding",
    "make_coloring",
    "classify_pair",
    "sample_pairs",
    "run_distortion",
    "report_constants",
    "required_band",
    "window_levels",
    "load_baselines",
    "run_checks",
]

STRATA = ("i", "ii", "iii-a", "iii-b")
STRATIFICATIONS = ("uniform", "scale-stratified", "case-stratified")
#: Octaves of |x| below the window's outer abscissa reached by the samplers.
DEPTH = 10
NEAR_COINCIDENT = 1e-9
HIST_EDGES = np.logspace(-2.0, 2.0, 41)


class ConfigError(ValueError):
    """Malformed configuration (a usage error at the CLI)."""


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class Config:
    tau: float = 8.0
    kappa: float = KAPPA
    j_min: int = CascadeParams.j_min
    j_max: int = CascadeParams.j_max
    level_range: tuple[int, int] = LEVEL_RANGE
    shooting_tol: float = 1e-6
    grid_resolution: float = 1.0 / 32.0
    window: tuple[float, float, float, float] = (-2.0, -2.0, 2.0, 2.0)
    palette: str = "periodic"
    period_n: int | None = None
    period_k: int | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if not self.kappa > 0:
            raise ConfigError(f"kappa must be positive, got {self.kappa}")
        if self.j_min > self.j_max:
            raise ConfigError(f"empty scale band [{self.j_min}, {self.j_max}]")
        if self.level_range[0] > self.level_range[1]:
            raise ConfigError(f"empty level range {self.level_range}")
        if not (self.shooting_tol > 0 and self.grid_resolution > 0):
            raise ConfigError("oracle tolerances must be positive")
        if self.palette not in ("periodic", "constant"):
            raise ConfigError(f"palette must be 'periodic' or 'constant', got {self.palette!r}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        _check_window(self.window)

    @property
    def cascade(self) -> CascadeParams:
        return CascadeParams(self.j_min, self.j_max)

    @property
    def constants(self) -> MetricConstants:
        return MetricConstants(self.kappa)

    def to_dict(self) -> dict:
        return asdict(self)


_INT_KEYS = {"j_min", "j_max", "period_n", "period_k", "workers"}
_FLOAT_KEYS = {"tau", "kappa", "shooting_tol", "grid_resolution"}


def parse_config(text: str) -> Config:
    """Parse ``key = value`` lines (``#`` comments) into a :class:`Config`.

    ``level_range`` takes ``n_min,n_max`` (or the separate keys ``level_min``
    and ``level_max``); ``window`` takes ``x0,y0,x1,y1``.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    values: dict = {}
    levels = list(Config.level_range)
    for key, raw in parser["config"].items():
        try:
            if key in _INT_KEYS:
                values[key] = int(raw)
            elif key in _FLOAT_KEYS:
                values[key] = float(raw)
            elif key == "level_range":
                lo, hi = (int(v) for v in raw.split(","))
                levels = [lo, hi]
            elif key == "level_min":
                levels[0] = int(raw)
            elif key == "level_max":
                levels[1] = int(raw)
            elif key == "window":
                values["window"] = parse_window(raw)
            elif key == "palette":
                values["palette"] = raw.strip()
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    values["level_range"] = tuple(levels)
    return Config(**values)


def load_config(path) -> Config:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def parse_window(text: str) -> tuple[float, float, float, float]:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise ValueError(f"window needs four numbers x0,y0,x1,y1, got {text!r}")
    return _check_window(tuple(parts))


def _check_window(window) -> tuple[float, float, float, float]:
    x0, y0, x1, y1 = window
    if not all(math.isfinite(v) for v in window) or not (x0 < x1 and y0 < y1):
        raise ConfigError(f"degenerate window {window}")
    if max(abs(x0), abs(x1)) == 0.0:
        raise ConfigError("window lies on the singular line")
    return tuple(float(v) for v in window)


@lru_cache(maxsize=32)
def _coloring(tau: float, palette: str, period_n: int | None, period_k: int | None) -> Coloring:
    base = build_coloring(tau)
    P = period_n or base.period_n
    S = period_k or base.period_k
    if palette == "constant":
        return Coloring(tau, P, S, np.ones((2, P, S), dtype=np.int64), wball_size=base.wball_size)
    if (P, S) == (base.period_n, base.period_k):
        return base
    pal = 1 + np.arange(2 * P * S, dtype=np.int64).reshape(P, 2, S).transpose(1, 0, 2)
    return Coloring(tau, P, S, pal, wball_size=base.wball_size)


def make_coloring(cfg: Config) -> Coloring:
    return _coloring(cfg.tau, cfg.palette, cfg.period_n, cfg.period_k)


def make_embedding(cfg: Config) -> Embedding:
    return Embedding(coloring=make_coloring(cfg), cascade=cfg.cascade, level_range=cfg.level_range)


def window_levels(window) -> tuple[int, int]:
    """Whitney levels reached by the samplers in ``window``."""
    X = max(abs(window[0]), abs(window[2]))
    n_min = 1 - math.frexp(X)[1]
    return n_min, n_min + DEPTH + 1


def required_band(window) -> tuple[int, int]:
    """Scale band the cascade must cover for points sampled in ``window``."""
    n_min, n_max = window_levels(window)
    y_extent = window[3] - window[1]
    j_lo, j_hi = band_for_levels(n_min, n_max, margin=0)
    return j_lo, max(j_hi, math.ceil(math.log(y_extent, 4.0)))


# --------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class SampleSpec:
    """Window ``(x0, y0, x1, y1)``, pair count, seed and stratification mode."""

    window: tuple[float, float, float, float] = (-2.0, -2.0, 2.0, 2.0)
    n_pairs: int = 1000
    seed: int = 0
    stratification: str = "case-stratified"

    def __post_init__(self) -> None:
        if self.n_pairs < 0:
            raise ValueError("n_pairs must be nonnegative")
        if self.stratification not in STRATIFICATIONS:
            raise ValueError(f"stratification must be one of {STRATIFICATIONS}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "window", _check_window(self.window))

    def dilated(self, lam: float) -> "SampleSpec":
        x0, y0, x1, y1 = self.window
        return replace(self, window=(lam * x0, lam * lam * y0, lam * x1, lam * lam * y1))

    def to_dict(self) -> dict:
        return {"window": list(self.window), "n_pairs": self.n_pairs, "seed": self.seed,
                "stratification": self.stratification}


def classify_pair(p: Point, q: Point, tau: float) -> str:
    """Proof case of a pair of off-line points.

    ``i``: the boxes share a star.  ``ii``: Whitney distance below ``tau``.
    ``iii-a`` / ``iii-b``: Whitney distance at least ``tau`` and box distance
    at least / below ``tau / 2`` times the larger box scale.  Box distances use
    the certified lower bound and scales stand in for diameters.
    """
    Q, R = box_containing(p), box_containing(q)
    if R in star2(Q):
        return "i"
    lo = float(pair_lower(Q.side, Q.n, Q.k, R.side, R.n, R.k))
    if lo < tau * min(Q.scale, R.scale):
        return "ii"
    return "iii-a" if lo >= 0.5 * tau * max(Q.scale, R.scale) else "iii-b"


def _draw_point(rng: np.random.Generator, window) -> Point | None:
    x0, y0, x1, y1 = window
    X = max(abs(x0), abs(x1))
    x = (1.0 if rng.random() < 0.5 else -1.0) * X * 2.0 ** (-DEPTH * rng.random())
    y = y0 + (y1 - y0) * rng.random()
    return Point(x, y) if x0 <= x <= x1 else None


def _draw_near(rng: np.random.Generator, p: Point, window) -> Point | None:
    x0, y0, x1, y1 = window
    s = abs(p.x) * 2.0 ** rng.uniform(-4.0, 8.0)
    x = p.x + s * rng.standard_normal()
    y = p.y + s * (abs(p.x) + s) * rng.standard_normal()
    if x == 0.0 or not (x0 <= x <= x1 and y0 <= y <= y1):
        return None
    return Point(x, y)


def _draw_uniform(rng: np.random.Generator, window) -> Point | None:
    x0, y0, x1, y1 = window
    x = x0 + (x1 - x0) * rng.random()
    y = y0 + (y1 - y0) * rng.random()
    return Point(x, y) if x != 0.0 else None


def sample_pairs(spec: SampleSpec, tau: float = 8.0) -> tuple[list[tuple[Point, Point]], list[str]]:
    """Deterministic pairs and their strata.

    Case stratification fills equal quotas per stratum by rejection from a
    mixture of local pairs (log-uniform separation relative to ``|x|``) and
    independent pairs.  The proposals scale exactly under dilations by powers
    of two, so matched seeds on ``W`` and ``delta_2(W)`` give dilated pairs.
    """
    rng = np.random.default_rng(spec.seed)
    pairs: list[tuple[Point, Point]] = []
    strata: list[str] = []
    if spec.stratification == "case-stratified":
        quota = {s: spec.n_pairs // 4 + (1 if i < spec.n_pairs % 4 else 0) for i, s in enumerate(STRATA)}
    else:
        quota = None
    attempts = 0
    budget = 400 * spec.n_pairs + 1000
    while len(pairs) < spec.n_pairs and attempts < budget:
        attempts += 1
        if spec.stratification == "uniform":
            p, q = _draw_uniform(rng, spec.window), _draw_uniform(rng, spec.window)
        else:
            p = _draw_point(rng, spec.window)
            if p is None:
                continue
            if spec.stratification == "scale-stratified" or rng.random() < 0.5:
                q = _draw_near(rng, p, spec.window)
            else:
                q = _draw_point(rng, spec.window)
        if p is None or q is None:
            continue
        s = classify_pair(p, q, tau)
        if quota is not None:
            if quota[s] == 0:
                continue
            quota[s] -= 1
        pairs.append((p, q))
        strata.append(s)
    return pairs, strata


# --------------------------------------------------------------------------
# pair evaluation

_STATE: dict = {}


def _init_worker(emb: Embedding, tol: float, resolution: float) -> None:
    _STATE.update(emb=emb, tol=tol, resolution=resolution)


def _oracle(p: Point, q: Point, tol: float, resolution: float):
    try:
        return shooting_distance(p, q, tol), None
    except NoConvergence as exc:
        first = str(exc)
    try:
        window = (min(p.x, q.x), max(p.x, q.x), min(p.y, q.y), max(p.y, q.y))
        return GridOracle(window=window, resolution=resolution).distance(p, q), None
    except Exception as exc:  # noqa: BLE001 - reported, never dropped
        return None, f"shooting: {first}; grid: {exc}"


def _evaluate(pair: tuple[Point, Point]) -> tuple:
    p, q = pair
    emb = _STATE["emb"]
    res, reason = _oracle(p, q, _STATE["tol"], _STATE["resolution"])
    if res is None:
        return ("skip", reason)
    try:
        D = pair_difference(p, q, emb)
    except LevelRangeError as exc:
        return ("skip", f"level range: {exc}")
    return ("ok", res.distance, res.method, D.g, D.H, D.dist)


def _evaluate_all(pairs, emb: Embedding, cfg: Config) -> list[tuple]:
    if cfg.workers == 1 or len(pairs) < 2:
        _init_worker(emb, cfg.shooting_tol, cfg.grid_resolution)
        return [_evaluate(pr) for pr in pairs]
    chunk = max(1, len(pairs) // (4 * cfg.workers))
    with ProcessPoolExecutor(cfg.workers, initializer=_init_worker,
                             initargs=(emb, cfg.shooting_tol, cfg.grid_resolution)) as pool:
        return list(pool.map(_evaluate, pairs, chunksize=chunk))


# --------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class DistortionReport:
    ratio_min: float | None
    ratio_max: float | None
    histogram: dict
    per_stratum: dict
    attribution: dict
    constants: dict
    oracle_method: dict
    n_pairs: int
    excluded: int
    skipped: list
    spec: SampleSpec
    components: np.ndarray = field(default=None, repr=False, compare=False)
    strata: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self) -> None:
        counted = sum(v["count"] for v in self.per_stratum.values())
        if counted + self.excluded + len(self.skipped) != self.n_pairs:
            raise ValueError("stratum counts, exclusions and skips do not add up to n_pairs")
        if self.ratio_min is not None and not 0 < self.ratio_min <= self.ratio_max:
            raise ValueError("ratio bounds must satisfy 0 < min <= max")

    def to_dict(self) -> dict:
        strata = {s: dict(self.per_stratum[s], attribution=self.attribution[s]) for s in self.per_stratum}
        return {
            "constants": self.constants,
            "ratios": {
                "min": self.ratio_min,
                "max": self.ratio_max,
                "count": sum(v["count"] for v in self.per_stratum.values()),
                "n_pairs": self.n_pairs,
                "excluded_near_coincident": self.excluded,
                "histogram": self.histogram,
                "oracle": self.oracle_method,
                "sample": self.spec.to_dict(),
            },
            "strata": strata,
            "skipped": self.skipped,
            "version": __version__,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def histogram_csv(self) -> str:
        lines = ["bucket_lo,bucket_hi,count"]
        h = self.histogram
        lines.append(f"0,{h['edges'][0]!r},{h['underflow']}")
        for lo, hi, c in zip(h["edges"][:-1], h["edges"][1:], h["counts"]):
            lines.append(f"{lo!r},{hi!r},{c}")
        lines.append(f"{h['edges'][-1]!r},inf,{h['overflow']}")
        return "\n".join(lines) + "\n"


def _histogram(ratios: np.ndarray) -> dict:
    counts, _ = np.histogram(ratios, bins=HIST_EDGES)
    return {
        "edges": [float(e) for e in HIST_EDGES],
        "counts": [int(c) for c in counts],
        "underflow": int((ratios < HIST_EDGES[0]).sum()),
        "overflow": int((ratios > HIST_EDGES[-1]).sum()),
    }


@lru_cache(maxsize=8)
def report_constants(cfg: Config) -> dict:
    """Measured and theoretical constants, on a canonical window independent of any sample."""
    from .embedding import local_chart
    from .partition import hull, measure_constants
    from .whitney import WhitneyBox

    line = measure_line_distortion(cfg.cascade, LineSample(), cfg.constants)
    L = L_for_constants(line)
    coloring = make_coloring(cfg)
    tau_theory = 2000.0 * L * L
    _, _, M_theory = coloring_periods(tau_theory)

    rng = np.random.default_rng(12345)
    pts, close = [], []
    for _ in range(1000):
        p = _draw_point(rng, (-2.0, -2.0, 2.0, 2.0))
        if p is None:
            continue
        pts.append(p)
        h = abs(p.x) * 1e-3
        close.append((p, Point(p.x + h * rng.uniform(-1, 1), p.y + h * abs(p.x) * rng.uniform(-1, 1))))
    part = measure_constants(pts, close[:300])

    annulus = []
    for _ in range(1000):
        Q = WhitneyBox(int(rng.choice([-1, 1])), int(rng.integers(-2, 6)), int(rng.integers(-64, 64)))
        (x0, x1), (y0, y1) = hull(Q)
        p = Point(rng.uniform(x0, x1), rng.uniform(y0, y1))
        annulus.append(float(np.linalg.norm(local_chart(Q, p))) / Q.scale)
    M1 = max(max(annulus), 1.0 / min(annulus))

    return {
        "kappa": cfg.kappa,
        "L_measured": line.L_measured,
        "L": L,
        "line_ratio_min": line.ratio_min,
        "line_ratio_max": line.ratio_max,
        "tau": cfg.tau,
        "tau_theory": tau_theory,
        "M": coloring.M,
        "M_theory": M_theory,
        "wball_size": coloring.wball_size,
        "dimension": 2 * coloring.M + 4,
        "C1": part.C1,
        "C2": part.C2,
        "C3": part.C3,
        "M1": M1,
        "cascade": cfg.cascade.to_dict(),
    }


def run_distortion(spec: SampleSpec, config: Config | None = None) -> DistortionReport:
    """Sample pairs, measure ``|F(p) - F(q)| / d(p, q)`` and aggregate by stratum.

    Distances come from the shooting oracle with the grid oracle as fallback;
    pairs where both fail are listed in ``skipped`` with the reason.  Pairs
    closer than ``1e-9`` are excluded from the ratios and counted.
    """
    cfg = config or Config()
    lo, hi = cfg.level_range
    n_lo, n_hi = window_levels(spec.window)
    if n_lo < lo or n_hi > hi:
        raise LevelRangeError(f"window levels [{n_lo}, {n_hi}] outside level range {cfg.level_range}")
    pairs, strata = sample_pairs(spec, cfg.tau)
    if len(pairs) < spec.n_pairs:
        raise RuntimeError(f"sampler filled only {len(pairs)} of {spec.n_pairs} pairs")
    results = _evaluate_all(pairs, make_embedding(cfg), cfg)

    skipped, excluded, methods = [], 0, {"shooting": 0, "grid": 0}
    rows, row_strata = [], []
    for idx, (res, s) in enumerate(zip(results, strata)):
        if res[0] == "skip":
            p, q = pairs[idx]
            skipped.append({"index": idx, "p": [p.x, p.y], "q": [q.x, q.y], "stratum": s, "reason": res[1]})
            continue
        _, d, method, g, H, dist = res
        if d < NEAR_COINCIDENT:
            excluded += 1
            continue
        methods[method] += 1
        rows.append((d, g, H, dist))
        row_strata.append(s)
    comp = np.array(rows, dtype=float).reshape(-1, 4)
    d = comp[:, 0]
    total = np.sqrt((comp[:, 1:] ** 2).sum(axis=1)) / d if len(rows) else np.empty(0)
    parts = comp[:, 1:] / d[:, None] if len(rows) else np.empty((0, 3))
    labels = np.array(row_strata)

    per_stratum, attribution = {}, {}
    for s in STRATA:
        mask = labels == s
        r = total[mask]
        per_stratum[s] = {"min": float(r.min()) if r.size else None,
                          "max": float(r.max()) if r.size else None,
                          "count": int(r.size)}
        attribution[s] = {name: (float(parts[mask, i].min()) if r.size else None)
                          for i, name in enumerate(("g", "H", "dist"))}
    return DistortionReport(
        ratio_min=float(total.min()) if total.size else None,
        ratio_max=float(total.max()) if total.size else None,
        histogram=_histogram(total),
        per_stratum=per_stratum,
        attribution=attribution,
        constants=report_constants(cfg),
        oracle_method=methods,
        n_pairs=spec.n_pairs,
        excluded=excluded,
        skipped=skipped,
        spec=spec,
        components=np.column_stack([total, parts]) if total.size else np.empty((0, 4)),
        strata=tuple(row_strata),
    )


#: Component that carries the co-Lipschitz bound in each stratum.
DESIGNATED = {"i": "H", "ii": "H", "iii-a": "g", "iii-b": "dist"}


def attribution_floor(tau: float) -> float:
    """Lower floor a designated component's ratio must clear in its stratum.

    In stratum iii-b the larger box is at least four times the smaller, so
    ``||x_p| - |x_q||`` is at least half the larger scale while the distance
    is at most a multiple of ``tau`` times that scale; ``1 / (32 tau)`` sits
    below that geometric bound.
    """
    return 1.0 / (32.0 * tau)


# --------------------------------------------------------------------------
# regression baselines


def load_baselines(path=None) -> dict:
    if path is None:
        text = resources.files("grushin").joinpath("data/baselines.json").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return json.loads(text)


def compare_baselines(measured: dict, baselines: dict) -> list[tuple[str, bool, float, str]]:
    """Per-key ``(name, ok, value, detail)`` against ``{"values": {name: {value, rel_tol}}}``."""
    out = []
    for name, ref in sorted(baselines["values"].items()):
        if name not in measured:
            out.append((name, False, float("nan"), "missing from measurement"))
            continue
        value = float(measured[name])
        tol = float(ref["rel_tol"])
        ok = abs(value - ref["value"]) <= tol * abs(ref["value"]) + 1e-300
        out.append((name, ok, value, f"baseline {ref['value']!r} +/- {tol:.0%}"))
    return out


# --------------------------------------------------------------------------
# checks


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str  # "pass", "fail" or "skip"
    value: float | None = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "value": self.value, "detail": self.detail}


def _result(name: str, ok: bool, value=None, detail: str = "") -> CheckResult:
    return CheckResult(name, "pass" if ok else "fail", None if value is None else float(value), detail)


CHECKS: list[tuple[str, Callable]] = []


def _check(name: str):
    def deco(fn):
        CHECKS.append((name, fn))
        return fn
    return deco


def run_checks(config: Config | None = None, *, baseline_path=None, only: tuple[str, ...] | None = None) -> list[CheckResult]:
    """Run every registered invariant check; a crashing check counts as a failure."""
    from . import checks  # noqa: F401  registers the suite

    cfg = config or Config()
    ctx = {"baseline_path": baseline_path}
    out = []
    for name, fn in CHECKS:
        if only and not any(name.startswith(prefix) for prefix in only):
            continue
        try:
            res = fn(cfg, ctx)
        except Exception as exc:  # noqa: BLE001 - a crash is a failed check
            res = CheckResult(name, "fail", None, f"{type(exc).__name__}: {exc}")
        out.append(res if res.name == name else replace(res, name=name))
    return out
