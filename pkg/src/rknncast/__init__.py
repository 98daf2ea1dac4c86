"""Reverse k-nearest-neighbor queries by ray casting a layered occluder
scene, with exact zone, arc-sweep, and brute-force references."""

from .baselines import direct_count, infzone_rknn, oracle_rknn, slice_arcs, slice_rknn
from .data import Dataset, SplitSpec, gen_synthetic, load_co, split_facilities
from .engine import QueryConfig, QueryResult, domain_rect, mono_rknn_query, rknn_query
from .geometry import HalfPlane, Occluder, Point2, Rect, Triangle2, bisector, build_occluder
from .raycast import HitReport, Ray, cast_all, count_hits
from .zone import CONSERVATIVE, EXACT, NO_PRUNING, PruningStrategy, Selection, select_facilities

__version__ = "0.1.0"

__all__ = [
    "CONSERVATIVE",
    "Dataset",
    "EXACT",
    "HalfPlane",
    "HitReport",
    "NO_PRUNING",
    "Occluder",
    "Point2",
    "PruningStrategy",
    "QueryConfig",
    "QueryResult",
    "Ray",
    "Rect",
    "Selection",
    "SplitSpec",
    "Triangle2",
    "bisector",
    "build_occluder",
    "cast_all",
    "count_hits",
    "direct_count",
    "domain_rect",
    "gen_synthetic",
    "infzone_rknn",
    "load_co",
    "mono_rknn_query",
    "oracle_rknn",
    "rknn_query",
    "select_facilities",
    "slice_arcs",
    "slice_rknn",
    "split_facilities",
    "__version__",
]
