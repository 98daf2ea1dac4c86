"""Vertical ray casting against the layered scene.

A user is a ray dropped from above the stack; the number of distinct
occluders it passes through is the number of competitors strictly closer
than the query.  Counting runs through compiled kernels over contiguous
user chunks, each chunk single threaded and writing disjoint output, so
results are identical for any worker count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._kernels import count_hits_bvh, count_hits_linear
from .geometry import Point2, Triangle2, triangle_contains
from .scene import Bvh, PackedScene, Triangle3


@dataclass(frozen=True)
class Ray:
    """Downward vertical ray from (x, y, origin_z)."""

    x: float
    y: float
    origin_z: float


@dataclass(frozen=True)
class HitReport:
    count: int  # distinct occluders passed, clipped at k
    is_rknn: bool  # count stayed below k


def intersect_ray_triangle(ray: Ray, tri: Triangle3) -> float | None:
    """Hit parameter along the drop, or None.  The triangle lies in a
    horizontal plane, so the 3D test reduces to closed 2D containment."""
    if tri.z >= ray.origin_z:
        return None
    p = Point2(ray.x, ray.y)
    flat = Triangle2(tri.v0, tri.v1, tri.v2)
    if not triangle_contains(flat, p):
        return None
    return ray.origin_z - tri.z


def moller_trumbore(orig: tuple, direction: tuple,
                    v0: tuple, v1: tuple, v2: tuple) -> float | None:
    """General 3D ray-triangle intersection, closed boundary, kept as an
    independent cross-check for the specialized vertical path."""
    e1 = (v1[0] - v0[0], v1[1] - v0[1], v1[2] - v0[2])
    e2 = (v2[0] - v0[0], v2[1] - v0[1], v2[2] - v0[2])
    px = direction[1] * e2[2] - direction[2] * e2[1]
    py = direction[2] * e2[0] - direction[0] * e2[2]
    pz = direction[0] * e2[1] - direction[1] * e2[0]
    det = e1[0] * px + e1[1] * py + e1[2] * pz
    if det == 0.0:
        return None
    inv = 1.0 / det
    tx = orig[0] - v0[0]
    ty = orig[1] - v0[1]
    tz = orig[2] - v0[2]
    u = (tx * px + ty * py + tz * pz) * inv
    if u < 0.0 or u > 1.0:
        return None
    qx = ty * e1[2] - tz * e1[1]
    qy = tz * e1[0] - tx * e1[2]
    qz = tx * e1[1] - ty * e1[0]
    v = (direction[0] * qx + direction[1] * qy + direction[2] * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return None
    t = (e2[0] * qx + e2[1] * qy + e2[2] * qz) * inv
    if t <= 0.0:
        return None
    return t


def count_hits(bvh: Bvh | None, scene: PackedScene, u: Point2, k: int,
               early_termination: bool = True) -> HitReport:
    counts = cast_counts(bvh, scene, np.array([[u.x, u.y]]), k,
                         early_termination=early_termination)
    return HitReport(int(counts[0]), bool(counts[0] < k))


def cast_all(bvh: Bvh | None, scene: PackedScene, users: np.ndarray, k: int,
             early_termination: bool = True, workers: int = 1,
             use_bvh: bool = True) -> np.ndarray:
    """Boolean result mask over users: True where fewer than k occluders
    swallow the dropped ray."""
    return cast_counts(bvh, scene, users, k, early_termination=early_termination,
                       workers=workers, use_bvh=use_bvh) < k


def cast_counts(bvh: Bvh | None, scene: PackedScene, users: np.ndarray, k: int,
                early_termination: bool = True, workers: int = 1,
                use_bvh: bool = True) -> np.ndarray:
    """Occluder counts for all users, clipped at k.  Results never depend
    on workers: chunks are contiguous row ranges with disjoint outputs."""
    packed = scene
    users = np.ascontiguousarray(users, dtype=np.float64)
    n = len(users)
    out = np.zeros(n, dtype=np.int64)
    if n == 0 or packed.n_occluders == 0:
        return out
    limit = np.int64(k if early_termination else packed.n_occluders + 1)
    px = np.ascontiguousarray(users[:, 0])
    py = np.ascontiguousarray(users[:, 1])

    def run(lo: int, hi: int) -> None:
        if use_bvh:
            count_hits_bvh(px[lo:hi], py[lo:hi], out[lo:hi], limit,
                           packed.ax, packed.ay, packed.bx, packed.by,
                           packed.cx, packed.cy, packed.tri_occ,
                           packed.occ_start,
                           packed.hp_nx, packed.hp_ny, packed.hp_c,
                           bvh.node_minx, bvh.node_miny,
                           bvh.node_maxx, bvh.node_maxy,
                           bvh.node_left, bvh.node_right,
                           bvh.node_start, bvh.node_count, bvh.perm)
        else:
            count_hits_linear(px[lo:hi], py[lo:hi], out[lo:hi], limit,
                              packed.ax, packed.ay, packed.bx, packed.by,
                              packed.cx, packed.cy, packed.occ_start,
                              packed.hp_nx, packed.hp_ny, packed.hp_c)

    workers = max(1, int(workers))
    if workers == 1 or n < 2 * workers:
        run(0, n)
    else:
        bounds = np.linspace(0, n, workers + 1, dtype=np.int64)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run, int(bounds[i]), int(bounds[i + 1]))
                       for i in range(workers)]
            for f in futures:
                f.result()
    np.minimum(out, k, out=out)
    return out
