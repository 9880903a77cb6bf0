"""Snowflake embedding of the singular line into R^3.

The line ``A = {x = 0}`` with the restricted distance ``kappa sqrt|dy|`` is the
1/2-snowflake of the real line.  It is embedded by a lacunary trigonometric
cascade: scale ``4^j`` contributes a circle of radius ``2^j`` drawn in one of
the three coordinate planes, cycling with period three so adjacent scales
never share a plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metric import MetricConstants

__all__ = [
    "CascadeParams",
    "LineDistortion",
    "LineSample",
    "DEFAULT_SCHEDULE",
    "embed_line",
    "line_difference",
    "line_increment",
    "holder_constant",
    "holder_bound",
    "measure_line_distortion",
    "band_for_levels",
    "L_for_constants",
]

_E = np.eye(3)
#: (a_j, b_j) for j mod 3: the (e1,e2), (e2,e3), (e3,e1) planes.
DEFAULT_SCHEDULE = ((_E[0], _E[1]), (_E[1], _E[2]), (_E[2], _E[0]))


def _frozen(v) -> np.ndarray:
    arr = np.array(v, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CascadeParams:
    j_min: int = -26
    j_max: int = 10
    phase: float = 0.0
    plane_schedule: tuple = field(default=DEFAULT_SCHEDULE)
    scale_base: float = 4.0

    def __post_init__(self) -> None:
        if self.j_min > self.j_max:
            raise ValueError(f"empty scale band [{self.j_min}, {self.j_max}]")
        if self.scale_base != 4.0:
            raise ValueError("only scale ratio 4 (snowflake exponent 1/2) is supported")
        sched = tuple((_frozen(a), _frozen(b)) for a, b in self.plane_schedule)
        if not sched:
            raise ValueError("plane schedule is empty")
        for a, b in sched:
            if a.shape != (3,) or b.shape != (3,):
                raise ValueError("schedule vectors must lie in R^3")
            if abs(a @ a - 1) > 1e-12 or abs(b @ b - 1) > 1e-12 or abs(a @ b) > 1e-12:
                raise ValueError("schedule entries must be orthonormal pairs")
        for (a0, b0), (a1, b1) in zip(sched, sched[1:] + sched[:1]):
            if len(sched) > 1 and _same_plane(a0, b0, a1, b1):
                raise ValueError("consecutive schedule entries span the same plane")
        object.__setattr__(self, "plane_schedule", sched)

    @property
    def scales(self) -> np.ndarray:
        return np.arange(self.j_min, self.j_max + 1)

    def frames(self) -> tuple[np.ndarray, np.ndarray]:
        """Stacked ``a_j`` and ``b_j`` for every scale in the band, shape (J, 3)."""
        period = len(self.plane_schedule)
        idx = [int(j) % period for j in self.scales]
        a = np.stack([self.plane_schedule[i][0] for i in idx])
        b = np.stack([self.plane_schedule[i][1] for i in idx])
        return a, b

    def shifted(self, steps: int = 1) -> "CascadeParams":
        return CascadeParams(self.j_min + steps, self.j_max + steps, self.phase,
                             self.plane_schedule, self.scale_base)

    def to_dict(self) -> dict:
        return {"j_min": self.j_min, "j_max": self.j_max, "phase": self.phase}


def _same_plane(a0, b0, a1, b1) -> bool:
    n0 = np.cross(a0, b0)
    n1 = np.cross(a1, b1)
    return bool(np.linalg.norm(np.cross(n0, n1)) < 1e-12)


def band_for_levels(n_min: int, n_max: int, margin: int = 3) -> tuple[int, int]:
    """Scale band covering Whitney levels ``n_min..n_max`` (level n has height 4^-n)."""
    return -(n_max + 1) - margin, -(n_min - 1) + margin


def _terms(params: CascadeParams):
    js = params.scales.astype(float)
    a, b = params.frames()
    return np.power(4.0, js), np.power(2.0, js), a, b


def embed_line(t, params: CascadeParams | None = None) -> np.ndarray:
    """Evaluate the cascade ``f`` at ordinate(s) ``t``; output shape ``t.shape + (3,)``.

    ``f(t) = sum_j 2^j [(cos(2 pi t / 4^j + phase) - cos phase) a_j
    + (sin(2 pi t / 4^j + phase) - sin phase) b_j]``, evaluated through the
    product forms so ``f(0) = 0`` exactly.
    """
    params = params or CascadeParams()
    t = np.asarray(t, dtype=float)
    period, amp, a, b = _terms(params)
    u = math.pi * t[..., None] / period
    su = np.sin(u)
    ca = -2.0 * np.sin(u + params.phase) * su * amp
    cb = 2.0 * np.cos(u + params.phase) * su * amp
    return ca @ a + cb @ b


def line_increment(t, delta, params: CascadeParams | None = None) -> np.ndarray:
    """``f(t + delta) - f(t)`` from the offset itself, without cancellation."""
    params = params or CascadeParams()
    t = np.asarray(t, dtype=float)
    delta = np.asarray(delta, dtype=float)
    period, amp, a, b = _terms(params)
    half_sum = math.pi * (2.0 * t + delta)[..., None] / period + params.phase
    sd = np.sin(math.pi * delta[..., None] / period)
    ca = -2.0 * np.sin(half_sum) * sd * amp
    cb = 2.0 * np.cos(half_sum) * sd * amp
    return ca @ a + cb @ b


def line_difference(s, t, params: CascadeParams | None = None) -> np.ndarray:
    """``f(s) - f(t)`` computed without cancellation for close ``s, t``."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return line_increment(t, s - t, params)


def holder_bound(delta, params: CascadeParams | None = None) -> np.ndarray:
    """Per-pair upper bound ``sum_j min(2^{j+1}, 2 pi 2^{-j} delta)`` on ``|f(s)-f(t)|``."""
    params = params or CascadeParams()
    delta = np.abs(np.asarray(delta, dtype=float))
    js = params.scales.astype(float)
    terms = np.minimum(np.power(2.0, js + 1), 2.0 * math.pi * np.power(2.0, -js) * delta[..., None])
    return terms.sum(axis=-1)


def holder_constant(params: CascadeParams | None = None) -> float:
    """``C_up = sup_delta holder_bound(delta) / sqrt(delta)``.

    The bound is piecewise linear and concave in ``delta`` with breakpoints
    ``4^j / pi``; dividing by ``sqrt(delta)`` makes each piece of the form
    ``alpha sqrt(delta) + beta / sqrt(delta)`` (convex), so the supremum is
    attained at a breakpoint or at an end of the band.
    """
    params = params or CascadeParams()
    js = params.scales.astype(float)
    cands = np.power(4.0, js) / math.pi
    return float(np.max(holder_bound(cands, params) / np.sqrt(cands)))


@dataclass(frozen=True)
class LineSample:
    n_pairs: int = 10_000
    seed: int = 0
    margin: int = 3
    phase_octaves: int = 2


@dataclass(frozen=True)
class LineDistortion:
    L_measured: float
    ratio_min: float
    ratio_max: float
    per_band: dict  # band j -> (min, median, max, count)

    def __post_init__(self) -> None:
        if not 0 < self.ratio_min <= self.ratio_max:
            raise ValueError("ratio bounds must satisfy 0 < min <= max")

    def to_dict(self) -> dict:
        return {"L_measured": self.L_measured, "ratio_min": self.ratio_min,
                "ratio_max": self.ratio_max,
                "per_band": {str(k): list(v) for k, v in sorted(self.per_band.items())}}


def sample_line_pairs(params: CascadeParams, sample: LineSample) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scale-stratified pairs: separations log-uniform within each interior band.

    A pair in band ``j`` starts at ``t`` uniform on ``+-4^(j + phase_octaves)``,
    so the phases of all scales up to a few steps above the separation are
    randomized; larger scales are in their linear regime there.
    """
    if sample.n_pairs <= 0:
        raise ValueError("line distortion needs a nonempty sample")
    lo_j = params.j_min + sample.margin
    hi_j = params.j_max - sample.margin
    if lo_j >= hi_j:
        raise ValueError(f"band [{params.j_min}, {params.j_max}] too narrow for margin {sample.margin}")
    rng = np.random.default_rng(sample.seed)
    bands = rng.integers(lo_j, hi_j, size=sample.n_pairs)
    delta = np.power(4.0, bands + rng.random(sample.n_pairs))
    span = np.power(4.0, bands + sample.phase_octaves)
    t = span * rng.uniform(-1.0, 1.0, size=sample.n_pairs)
    return t, t + delta, bands


def measure_line_distortion(params: CascadeParams | None = None, sample: LineSample | None = None,
                            c: MetricConstants | None = None) -> LineDistortion:
    """Ratios ``|f(s) - f(t)| / (kappa sqrt|s - t|)`` over a scale-stratified sample."""
    params = params or CascadeParams()
    sample = sample or LineSample()
    kappa = (c or MetricConstants()).kappa
    s, t, bands = sample_line_pairs(params, sample)
    diff = np.linalg.norm(line_difference(t, s, params), axis=-1)
    ratio = diff / (kappa * np.sqrt(np.abs(t - s)))
    per_band = {}
    for j in np.unique(bands):
        r = ratio[bands == j]
        per_band[int(j)] = (float(r.min()), float(np.median(r)), float(r.max()), int(r.size))
    rmin, rmax = float(ratio.min()), float(ratio.max())
    return LineDistortion(math.sqrt(rmax / rmin), rmin, rmax, per_band)


def L_for_constants(distortion: LineDistortion) -> int:
    """``L`` as consumed downstream: the measured constant rounded up."""
    return int(math.ceil(distortion.L_measured))

