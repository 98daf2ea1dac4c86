"""Influence-zone maintenance and facility pruning.

The zone is kept as an arrangement of convex pieces, each tagged with the
number of accepted competitors strictly closer than the query (its
coverage).  Pieces reaching coverage k are discarded; what remains is
exactly the region whose points are results.  Facility selection walks
candidates in distance order and keeps the ones whose bisector still cuts
the zone, per strategy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyFacilitySet, QueryOutsideDomain, StaleZone
from .geometry import (
    HalfPlane,
    Occluder,
    Point2,
    Rect,
    bisector,
    build_occluder,
    edge_cross,
)

DEFAULT_EXACT_BUDGET: int = 20


@dataclass(frozen=True)
class PruningStrategy:
    kind: str  # "exact" | "conservative" | "none"
    exact_budget: int = DEFAULT_EXACT_BUDGET

    def __post_init__(self):
        if self.kind not in ("exact", "conservative", "none"):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.exact_budget < 0:
            raise ValueError("exact_budget must be >= 0")


EXACT = PruningStrategy("exact")
CONSERVATIVE = PruningStrategy("conservative")
NO_PRUNING = PruningStrategy("none")


class ZonePiece:
    """Convex CCW polygon with a coverage count < k."""

    __slots__ = ("poly", "coverage", "max_radius", "min_edge_dist")

    def __init__(self, poly: np.ndarray, coverage: int, qx: float, qy: float):
        self.poly = poly
        self.coverage = coverage
        dx = poly[:, 0] - qx
        dy = poly[:, 1] - qy
        self.max_radius = float(np.sqrt(np.max(dx * dx + dy * dy)))
        self.min_edge_dist = _min_segment_distance(poly, qx, qy)


def _min_segment_distance(poly: np.ndarray, qx: float, qy: float) -> float:
    a = poly
    b = np.roll(poly, -1, axis=0)
    e = b - a
    d = np.array([qx, qy]) - a
    ee = (e * e).sum(axis=1)
    ee[ee == 0.0] = 1.0  # duplicate vertices contribute their endpoint distance
    t = np.clip((d * e).sum(axis=1) / ee, 0.0, 1.0)
    proj = a + t[:, None] * e
    return float(np.sqrt(np.min((proj[:, 0] - qx) ** 2 + (proj[:, 1] - qy) ** 2)))


@dataclass
class Zone:
    pieces: list[ZonePiece]
    k: int
    q: Point2
    accepted: list[int] = field(default_factory=list)
    frozen: bool = False
    max_r: float = 0.0  # farthest piece vertex from q
    min_b: float = 0.0  # closest piece boundary point to q

    def _refresh_bounds(self) -> None:
        self.max_r = max((p.max_radius for p in self.pieces), default=0.0)
        self.min_b = min((p.min_edge_dist for p in self.pieces), default=0.0)


def zone_init(rect: Rect, k: int, q: Point2) -> Zone:
    if k < 1:
        raise ValueError("k must be >= 1")
    if not rect.contains(q):
        raise QueryOutsideDomain(f"q=({q.x}, {q.y}) outside domain")
    poly = np.array([(p.x, p.y) for p in rect.corners()], dtype=np.float64)
    zone = Zone([ZonePiece(poly, 0, q.x, q.y)], k, q)
    zone._refresh_bounds()
    return zone


def _split_convex(poly: np.ndarray, s: np.ndarray) -> tuple[list, list]:
    """Split a convex CCW polygon by the line s == 0 into (invalid, valid)
    vertex chains; vertices exactly on the line join both."""
    inv: list = []
    val: list = []
    n = len(poly)
    for i in range(n):
        a = poly[i]
        sa = s[i]
        j = (i + 1) % n
        sb = s[j]
        if sa > 0.0:
            inv.append(a)
        elif sa < 0.0:
            val.append(a)
        else:
            inv.append(a)
            val.append(a)
        if (sa > 0.0 and sb < 0.0) or (sa < 0.0 and sb > 0.0):
            t = sa / (sa - sb)
            x = a + t * (poly[j] - a)
            inv.append(x)
            val.append(x)
    return inv, val


def _chain_to_piece(chain: list, coverage: int, qx: float, qy: float) -> ZonePiece | None:
    if len(chain) < 3:
        return None
    out = []
    for p in chain:
        if not out or p[0] != out[-1][0] or p[1] != out[-1][1]:
            out.append(p)
    if len(out) > 1 and out[0][0] == out[-1][0] and out[0][1] == out[-1][1]:
        out.pop()
    if len(out) < 3:
        return None
    poly = np.asarray(out, dtype=np.float64)
    x, y = poly[:, 0], poly[:, 1]
    area2 = float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
    if area2 == 0.0:
        return None
    return ZonePiece(poly, coverage, qx, qy)


def zone_insert(zone: Zone, facility_id: int, h: HalfPlane) -> bool:
    """Insert a bisector: split pieces, bump coverage on the invalid side,
    drop pieces reaching k.  Returns False (zone untouched) when no piece
    has a vertex strictly on the invalid side."""
    if zone.frozen:
        raise StaleZone("zone frozen by a conservative budget")
    n = np.array([h.nx, h.ny])
    sides = [piece.poly @ n - h.c for piece in zone.pieces]
    if not any((s > 0.0).any() for s in sides):
        return False
    qx, qy = zone.q.x, zone.q.y
    out: list[ZonePiece] = []
    for piece, s in zip(zone.pieces, sides):
        if not (s > 0.0).any():
            out.append(piece)
            continue
        if not (s < 0.0).any():
            if piece.coverage + 1 < zone.k:
                piece.coverage += 1
                out.append(piece)
            continue
        inv, val = _split_convex(piece.poly, s)
        vp = _chain_to_piece(val, piece.coverage, qx, qy)
        if vp is not None:
            out.append(vp)
        if piece.coverage + 1 < zone.k:
            ip = _chain_to_piece(inv, piece.coverage + 1, qx, qy)
            if ip is not None:
                out.append(ip)
    zone.pieces = out
    zone.accepted.append(facility_id)
    zone._refresh_bounds()
    return True


def cheap_prune(zone: Zone, f: Point2) -> bool:
    """True when f is provably unable to cut the zone: it sits more than
    twice the farthest zone vertex from q."""
    if not zone.pieces:
        return True
    d = math.hypot(f.x - zone.q.x, f.y - zone.q.y)
    return d > 2.0 * zone.max_r


def cheap_keep(zone: Zone, f: Point2) -> bool:
    """True when f provably cuts the zone: its bisector midpoint lies
    strictly inside every piece boundary's clearance from q."""
    if not zone.pieces:
        return False
    d = math.hypot(f.x - zone.q.x, f.y - zone.q.y)
    return d < 2.0 * zone.min_b


def zone_contains(zone: Zone, p: Point2) -> bool:
    """Closed membership in any piece.  Raises on conservatively frozen
    zones, whose piece set no longer reflects all accepted facilities."""
    if zone.frozen:
        raise StaleZone("zone frozen by a conservative budget")
    for piece in zone.pieces:
        poly = piece.poly
        m = len(poly)
        inside = True
        for i in range(m):
            a = poly[i]
            b = poly[(i + 1) % m]
            if edge_cross(Point2(a[0], a[1]), Point2(b[0], b[1]), p) < 0.0:
                inside = False
                break
        if inside:
            return True
    return False


def pack_zone_pieces(zone: Zone) -> tuple[np.ndarray, ...]:
    """Flatten pieces for the membership kernel: concatenated vertices,
    per-piece prefix offsets, and per-piece bounding boxes."""
    polys = [p.poly for p in zone.pieces]
    n = sum(len(p) for p in polys)
    vx = np.empty(n)
    vy = np.empty(n)
    start = np.zeros(len(polys) + 1, dtype=np.int64)
    pminx = np.empty(len(polys))
    pminy = np.empty(len(polys))
    pmaxx = np.empty(len(polys))
    pmaxy = np.empty(len(polys))
    at = 0
    for i, poly in enumerate(polys):
        m = len(poly)
        vx[at:at + m] = poly[:, 0]
        vy[at:at + m] = poly[:, 1]
        at += m
        start[i + 1] = at
        pminx[i] = poly[:, 0].min()
        pmaxx[i] = poly[:, 0].max()
        pminy[i] = poly[:, 1].min()
        pmaxy[i] = poly[:, 1].max()
    return vx, vy, start, pminx, pminy, pmaxx, pmaxy


@dataclass
class Selection:
    """Outcome of facility selection: occluders in acceptance order plus the
    zone that justified them (None for the non-pruning strategy)."""

    occluders: list[Occluder]
    zone: Zone | None
    accepted_ids: list[int]


def select_facilities(F: np.ndarray, q_index: int, k: int, rect: Rect,
                      strategy: PruningStrategy) -> Selection:
    """Walk facilities by increasing distance from the query (ties by index),
    skipping coincident ones, and accept occluders per strategy."""
    F = np.asarray(F, dtype=np.float64)
    if len(F) == 0:
        raise EmptyFacilitySet("no facilities")
    qx, qy = float(F[q_index, 0]), float(F[q_index, 1])
    q = Point2(qx, qy)
    d2 = (F[:, 0] - qx) ** 2 + (F[:, 1] - qy) ** 2
    order = np.argsort(d2, kind="stable")

    occluders: list[Occluder] = []
    accepted_ids: list[int] = []

    if strategy.kind == "none":
        for idx in order:
            i = int(idx)
            if F[i, 0] == qx and F[i, 1] == qy:
                continue
            o = build_occluder(Point2(F[i, 0], F[i, 1]), q, rect, facility_id=i)
            if o is None:
                continue
            occluders.append(o)
            accepted_ids.append(i)
        return Selection(occluders, None, accepted_ids)

    zone = zone_init(rect, k, q)
    budget = strategy.exact_budget if strategy.kind == "conservative" else None
    for idx in order:
        i = int(idx)
        fx, fy = float(F[i, 0]), float(F[i, 1])
        if fx == qx and fy == qy:
            continue
        f = Point2(fx, fy)
        if cheap_prune(zone, f):
            continue
        o = build_occluder(f, q, rect, facility_id=i)
        if o is None:
            continue  # invalid side has no interior inside the domain
        if zone.frozen:
            occluders.append(o)
            accepted_ids.append(i)
            continue
        keep = cheap_keep(zone, f)
        ok = zone_insert(zone, i, o.halfplane)
        assert ok or not keep  # cheap_keep is a sound acceptance guarantee
        if ok:
            occluders.append(o)
            accepted_ids.append(i)
            if budget is not None and len(accepted_ids) >= budget:
                zone.frozen = True
    return Selection(occluders, zone, accepted_ids)
