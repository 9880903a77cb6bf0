"""Bi-Lipschitz embedding of the Grushin plane into Euclidean space.

Submodules: ``metric`` (coordinates and closed-form distance bounds),
``geodesic`` (shooting and grid distance oracles), ``line`` (snowflake
embedding of the singular line), ``whitney`` (boxes, W-balls, coloring),
``partition`` (partition of unity), ``embedding`` (the map ``F``) and
``harness`` (sampling, distortion reports and checks).
"""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .embedding import Embedding, embed_F, pair_difference  # noqa: E402
from .geodesic import GridOracle, NoConvergence, grid_distance, oracle_distance, shooting_distance  # noqa: E402
from .line import CascadeParams, embed_line, measure_line_distortion  # noqa: E402
from .metric import KAPPA, DistanceInterval, MetricConstants, Point, dilate, distance_bounds  # noqa: E402
from .whitney import WhitneyBox, box_containing, build_coloring  # noqa: E402

__all__ = [
    "__version__",
    "BACKEND",
    "CascadeParams",
    "DistanceInterval",
    "Embedding",
    "GridOracle",
    "KAPPA",
    "MetricConstants",
    "NoConvergence",
    "Point",
    "WhitneyBox",
    "box_containing",
    "build_coloring",
    "dilate",
    "distance_bounds",
    "embed_F",
    "embed_line",
    "grid_distance",
    "measure_line_distortion",
    "oracle_distance",
    "pair_difference",
    "shooting_distance",
]
