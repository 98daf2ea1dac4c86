"""2D primitives: bisectors, half-plane side tests, occluder construction.

An occluder is the region where a competitor facility beats the query
facility (its "invalid side"), clipped to the domain rectangle and encoded
as 1-3 triangles.  Ties on the bisector go to the query, so occluders
represent the OPEN invalid side: membership requires a strictly positive
half-plane evaluation, while the triangles themselves are closed sets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import CoincidentFacilities

# Supporting-line crossings farther than this many domain diagonals from the
# domain center trigger the exact-clipping fallback.
FALLBACK_FACTOR: float = 1e3


class Side(Enum):
    INVALID = -1
    BOUNDARY = 0
    VALID = 1


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")


@dataclass(frozen=True)
class Rect:
    min: Point2
    max: Point2

    def __post_init__(self):
        if not (self.min.x < self.max.x and self.min.y < self.max.y):
            raise ValueError("rect must have strictly positive area")

    def corners(self) -> tuple[Point2, Point2, Point2, Point2]:
        """Counter-clockwise, fixed order: min-min, max-min, max-max, min-max."""
        return (
            Point2(self.min.x, self.min.y),
            Point2(self.max.x, self.min.y),
            Point2(self.max.x, self.max.y),
            Point2(self.min.x, self.max.y),
        )

    def center(self) -> Point2:
        return Point2(0.5 * (self.min.x + self.max.x), 0.5 * (self.min.y + self.max.y))

    def diagonal(self) -> float:
        return math.hypot(self.max.x - self.min.x, self.max.y - self.min.y)

    def contains(self, p: Point2) -> bool:
        return self.min.x <= p.x <= self.max.x and self.min.y <= p.y <= self.max.y


@dataclass(frozen=True)
class HalfPlane:
    """Oriented half-plane whose open side { p : n·p > c } is invalid."""

    nx: float
    ny: float
    c: float

    def eval(self, p: Point2) -> float:
        """n·p − c; positive on the invalid side, zero on the bisector."""
        return self.nx * p.x + self.ny * p.y - self.c


@dataclass(frozen=True)
class Triangle2:
    v0: Point2
    v1: Point2
    v2: Point2
    occluder_id: int = -1
    sub: int = 0

    def signed_area(self) -> float:
        return 0.5 * edge_cross(self.v0, self.v1, self.v2)


@dataclass(frozen=True)
class Occluder:
    facility_id: int
    triangles: tuple[Triangle2, ...]
    halfplane: HalfPlane
    case: str = "single"  # construction route: axis | single | fan


def bisector(a: Point2, q: Point2) -> HalfPlane:
    """Perpendicular bisector of (a, q) as the half-plane where a is strictly
    closer than q: n = a − q, c = (|a|² − |q|²)/2."""
    if a.x == q.x and a.y == q.y:
        raise CoincidentFacilities(f"a == q == ({a.x}, {a.y})")
    nx = a.x - q.x
    ny = a.y - q.y
    c = 0.5 * ((a.x * a.x + a.y * a.y) - (q.x * q.x + q.y * q.y))
    return HalfPlane(nx, ny, c)


def side(h: HalfPlane, p: Point2) -> Side:
    v = h.eval(p)
    if v > 0.0:
        return Side.INVALID
    if v < 0.0:
        return Side.VALID
    return Side.BOUNDARY


def edge_cross(a: Point2, b: Point2, p: Point2) -> float:
    """Cross product of p against the directed edge a→b, evaluated in a
    canonical (lexicographic) orientation.

    Both traversal directions of a shared edge therefore see bitwise-negated
    values of one float expression, so a point on the edge is never lost
    between two adjacent triangles.
    """
    if (a.x, a.y) <= (b.x, b.y):
        return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
    return -((a.x - b.x) * (p.y - b.y) - (a.y - b.y) * (p.x - b.x))


def triangle_contains(t: Triangle2, p: Point2) -> bool:
    """Closed point-in-triangle test, orientation-agnostic."""
    d0 = edge_cross(t.v0, t.v1, p)
    d1 = edge_cross(t.v1, t.v2, p)
    d2 = edge_cross(t.v2, t.v0, p)
    has_neg = d0 < 0.0 or d1 < 0.0 or d2 < 0.0
    has_pos = d0 > 0.0 or d1 > 0.0 or d2 > 0.0
    return not (has_neg and has_pos)


def clip_rect_halfplane(rect: Rect, h: HalfPlane) -> list[Point2]:
    """Rect ∩ closed invalid side as a CCW convex polygon (≤ 5 vertices)."""
    poly = rect.corners()
    out: list[Point2] = []
    n = len(poly)
    for i in range(n):
        cur, nxt = poly[i], poly[(i + 1) % n]
        sc, sn = h.eval(cur), h.eval(nxt)
        if sc >= 0.0:
            out.append(cur)
        if (sc > 0.0 and sn < 0.0) or (sc < 0.0 and sn > 0.0):
            t = sc / (sc - sn)
            out.append(Point2(cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)))
    dedup: list[Point2] = []
    for p in out:
        if not dedup or (p.x, p.y) != (dedup[-1].x, dedup[-1].y):
            dedup.append(p)
    if len(dedup) > 1 and (dedup[0].x, dedup[0].y) == (dedup[-1].x, dedup[-1].y):
        dedup.pop()
    return dedup


def _fan_triangles(poly: list[Point2], facility_id: int) -> tuple[Triangle2, ...]:
    tris = []
    for i in range(1, len(poly) - 1):
        t = Triangle2(poly[0], poly[i], poly[i + 1], facility_id, len(tris))
        if t.signed_area() != 0.0:
            tris.append(t)
    return tuple(tris)


def _axis_aligned_triangles(a: Point2, q: Point2, rect: Rect,
                            facility_id: int) -> tuple[Triangle2, ...]:
    # Invalid region is a sub-rectangle; split along the diagonal shared by
    # both triangles so the pair (v1,p1,p2) ∪ (v1,v2,p2) covers it exactly.
    if a.y == q.y:  # vertical bisector x = mid
        mid = 0.5 * (a.x + q.x)
        near = min(max(mid, rect.min.x), rect.max.x)
        far = rect.max.x if a.x > q.x else rect.min.x
        v1 = Point2(far, rect.min.y)
        v2 = Point2(far, rect.max.y)
        p1 = Point2(near, rect.min.y)
        p2 = Point2(near, rect.max.y)
    else:  # horizontal bisector y = mid
        mid = 0.5 * (a.y + q.y)
        near = min(max(mid, rect.min.y), rect.max.y)
        far = rect.max.y if a.y > q.y else rect.min.y
        v1 = Point2(rect.min.x, far)
        v2 = Point2(rect.max.x, far)
        p1 = Point2(rect.min.x, near)
        p2 = Point2(rect.max.x, near)
    tris = []
    for t in (Triangle2(v1, p1, p2, facility_id, 0), Triangle2(v1, v2, p2, facility_id, 1)):
        if t.signed_area() != 0.0:
            tris.append(Triangle2(t.v0, t.v1, t.v2, facility_id, len(tris)))
    return tuple(tris)


def build_occluder(a: Point2, q: Point2, rect: Rect,
                   facility_id: int = -1) -> Occluder | None:
    """Triangles covering rect ∩ invalid side of the (a, q) bisector.

    Axis-aligned pairs produce a two-triangle sub-rectangle; the general case
    produces the single triangle with apex at the strictly-invalid corner of
    maximum perpendicular bisector distance, its other two vertices on the
    supporting lines of that corner's rect edges (possibly outside rect).
    Crossings farther than FALLBACK_FACTOR diagonals fall back to an exact
    fan triangulation of the clipped region.  Returns None when no corner is
    strictly invalid (the open invalid side has no interior inside rect).
    """
    h = bisector(a, q)
    corners = rect.corners()
    vals = [h.eval(p) for p in corners]
    if not any(v > 0.0 for v in vals):
        return None

    if a.x == q.x or a.y == q.y:
        tris = _axis_aligned_triangles(a, q, rect, facility_id)
        if not tris:
            return None
        return Occluder(facility_id, tris, h, "axis")

    # apex: strictly-invalid corner with max perpendicular distance (max n·p);
    # first corner in the fixed order wins float ties
    best = -1
    for i, v in enumerate(vals):
        if v > 0.0 and (best < 0 or v > vals[best]):
            best = i
    apex = corners[best]

    p1y = (h.c - h.nx * apex.x) / h.ny
    p2x = (h.c - h.ny * apex.y) / h.nx
    ctr = rect.center()
    lim = FALLBACK_FACTOR * rect.diagonal()
    far_out = (
        not (math.isfinite(p1y) and math.isfinite(p2x))
        or math.hypot(apex.x - ctr.x, p1y - ctr.y) > lim
        or math.hypot(p2x - ctr.x, apex.y - ctr.y) > lim
    )
    if far_out:
        tris = _fan_triangles(clip_rect_halfplane(rect, h), facility_id)
        case = "fan"
    else:
        t = Triangle2(apex, Point2(apex.x, p1y), Point2(p2x, apex.y), facility_id, 0)
        tris = (t,) if t.signed_area() != 0.0 else ()
        case = "single"
    if not tris:
        return None
    return Occluder(facility_id, tris, h, case)


def point_in_occluder(o: Occluder, p: Point2) -> bool:
    """Occluder membership: strictly on the invalid side and inside the
    closed triangle union.  Contributes at most 1 regardless of how many
    triangles contain p (shared edges counted once)."""
    if o.halfplane.eval(p) <= 0.0:
        return False
    return any(triangle_contains(t, p) for t in o.triangles)


def polygon_area(poly: list[Point2]) -> float:
    """Shoelace area, positive for CCW."""
    s = 0.0
    n = len(poly)
    for i in range(n):
        p, r = poly[i], poly[(i + 1) % n]
        s += p.x * r.y - r.x * p.y
    return 0.5 * s
