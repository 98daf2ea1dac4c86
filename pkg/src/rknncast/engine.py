"""Query pipeline: select occluders, stack the scene, cast user rays.

Timings are split by stage so benchmarks can attribute cost; the transfer
slot is always zero here since nothing leaves host memory, but the column
is kept so downstream tooling sees a stable schema.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyFacilitySet, InvalidQueryIndex
from .geometry import Point2, Rect
from .raycast import cast_counts
from .scene import assemble_scene, build_bvh, pack_scene
from .zone import EXACT, PruningStrategy, select_facilities

DEFAULT_MARGIN: float = 0.001


@dataclass(frozen=True)
class QueryConfig:
    k: int
    strategy: PruningStrategy = EXACT
    early_termination: bool = True
    use_bvh: bool = True
    workers: int = 1
    margin_fraction: float = DEFAULT_MARGIN

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass
class QueryResult:
    ids: np.ndarray  # user rows that keep the query among their k nearest
    counts: np.ndarray  # per user, competitors found (clipped at k)
    occluders_accepted: int
    t_occluder_ms: float = 0.0
    t_bvh_ms: float = 0.0
    t_cast_ms: float = 0.0
    t_transfer_ms: float = 0.0
    t_total_ms: float = 0.0
    accepted_ids: list[int] = field(default_factory=list)

    @property
    def result_user_ids(self) -> np.ndarray:
        return self.ids

    @property
    def timings(self) -> dict[str, float]:
        return {
            "occluder_build_ms": self.t_occluder_ms,
            "bvh_build_ms": self.t_bvh_ms,
            "raycast_ms": self.t_cast_ms,
            "total_ms": self.t_total_ms,
        }


def domain_rect(F: np.ndarray, U: np.ndarray | None = None,
                margin_fraction: float = DEFAULT_MARGIN) -> Rect:
    """Tight bounds over all points, padded per axis; a collapsed axis is
    widened to the other axis's raw extent (at least one unit), centered,
    with no extra margin."""
    pts = np.asarray(F, dtype=np.float64)
    if U is not None and len(U) > 0:
        pts = np.vstack([pts, np.asarray(U, dtype=np.float64)])
    minx, miny = pts.min(axis=0)
    maxx, maxy = pts.max(axis=0)
    ex = maxx - minx
    ey = maxy - miny
    if ex > 0.0:
        lox, hix = minx - margin_fraction * ex, maxx + margin_fraction * ex
    else:
        w = max(1.0, ey)
        lox, hix = minx - 0.5 * w, minx + 0.5 * w
    if ey > 0.0:
        loy, hiy = miny - margin_fraction * ey, maxy + margin_fraction * ey
    else:
        h = max(1.0, ex)
        loy, hiy = miny - 0.5 * h, miny + 0.5 * h
    return Rect(Point2(float(lox), float(loy)), Point2(float(hix), float(hiy)))


def _validated(F: np.ndarray, q_index: int) -> np.ndarray:
    F = np.asarray(F, dtype=np.float64)
    if len(F) < 1:
        raise EmptyFacilitySet("need at least one facility")
    if not 0 <= q_index < len(F):
        raise InvalidQueryIndex(f"q_index {q_index} outside 0..{len(F) - 1}")
    return F


def rknn_query(F: np.ndarray, U: np.ndarray, q_index: int,
               config: QueryConfig, rect: Rect | None = None) -> QueryResult:
    t_start = time.perf_counter()
    F = _validated(F, q_index)
    U = np.asarray(U, dtype=np.float64)
    if rect is None:
        rect = domain_rect(F, U, config.margin_fraction)

    t0 = time.perf_counter()
    sel = select_facilities(F, q_index, config.k, rect, config.strategy)
    t1 = time.perf_counter()
    packed = pack_scene(assemble_scene(sel.occluders))
    bvh = build_bvh(packed) if config.use_bvh else None
    t2 = time.perf_counter()
    counts = cast_counts(bvh, packed, U, config.k,
                         early_termination=config.early_termination,
                         workers=config.workers, use_bvh=config.use_bvh)
    t3 = time.perf_counter()

    ids = np.nonzero(counts < config.k)[0].astype(np.int64)
    return QueryResult(
        ids=ids,
        counts=counts,
        occluders_accepted=len(sel.accepted_ids),
        t_occluder_ms=(t1 - t0) * 1e3,
        t_bvh_ms=(t2 - t1) * 1e3,
        t_cast_ms=(t3 - t2) * 1e3,
        t_transfer_ms=0.0,
        t_total_ms=(time.perf_counter() - t_start) * 1e3,
        accepted_ids=list(sel.accepted_ids),
    )


def mono_rknn_query(P: np.ndarray, q_index: int, config: QueryConfig,
                    rect: Rect | None = None) -> QueryResult:
    """Single-set variant: every point is both candidate and competitor.
    Runs the whole pipeline at k + 1 so each candidate can absorb the hit
    from its own occluder, then discounts that hit where it was accepted."""
    t_start = time.perf_counter()
    P = _validated(P, q_index)
    if rect is None:
        rect = domain_rect(P, None, config.margin_fraction)
    k = config.k
    k_eff = k + 1

    t0 = time.perf_counter()
    sel = select_facilities(P, q_index, k_eff, rect, config.strategy)
    t1 = time.perf_counter()
    packed = pack_scene(assemble_scene(sel.occluders))
    bvh = build_bvh(packed) if config.use_bvh else None
    t2 = time.perf_counter()
    counts = cast_counts(bvh, packed, P, k_eff,
                         early_termination=config.early_termination,
                         workers=config.workers, use_bvh=config.use_bvh)
    t3 = time.perf_counter()

    own = np.zeros(len(P), dtype=np.int64)
    own[sel.accepted_ids] = 1
    adjusted = counts - own
    adjusted[q_index] = k  # the query itself is never a candidate
    ids = np.nonzero(adjusted < k)[0].astype(np.int64)
    return QueryResult(
        ids=ids,
        counts=np.minimum(adjusted, k),
        occluders_accepted=len(sel.accepted_ids),
        t_occluder_ms=(t1 - t0) * 1e3,
        t_bvh_ms=(t2 - t1) * 1e3,
        t_cast_ms=(t3 - t2) * 1e3,
        t_transfer_ms=0.0,
        t_total_ms=(time.perf_counter() - t_start) * 1e3,
        accepted_ids=list(sel.accepted_ids),
    )
