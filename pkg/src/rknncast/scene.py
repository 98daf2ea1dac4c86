"""Layered triangle scene and its bounding-volume hierarchy.

Occluders are stacked one per integer height in acceptance order, so every
triangle lives on its own horizontal plane and a vertical ray from above
the stack can only meet each occluder's layer once.  The packed form is a
struct of arrays consumed by the counting kernels; the BVH is a binary
median-split tree over triangle centroids with small leaves.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Occluder, Point2

LEAF_SIZE: int = 4
MAX_DEPTH: int = 64


@dataclass(frozen=True)
class Triangle3:
    v0: Point2
    v1: Point2
    v2: Point2
    z: float
    occluder_ord: int  # 1-based acceptance order
    sub: int


@dataclass
class Scene:
    occluders: list[Occluder]
    triangles: list[Triangle3]
    origin_z: float


def assemble_scene(occluders: list[Occluder]) -> Scene:
    """Stack occluders at z = 1, 2, ... in the given order; ray origins sit
    one layer above the top."""
    tris: list[Triangle3] = []
    for ord0, occ in enumerate(occluders):
        z = float(ord0 + 1)
        for tri in occ.triangles:
            tris.append(Triangle3(tri.v0, tri.v1, tri.v2, z, ord0 + 1, tri.sub))
    return Scene(list(occluders), tris, float(len(occluders) + 1))


@dataclass
class PackedScene:
    """Flat arrays for the kernels.  Triangles of one occluder occupy the
    contiguous index range occ_start[i] .. occ_start[i+1]."""

    ax: np.ndarray
    ay: np.ndarray
    bx: np.ndarray
    by: np.ndarray
    cx: np.ndarray
    cy: np.ndarray
    z: np.ndarray
    tri_occ: np.ndarray  # 1-based occluder ordinal per triangle
    occ_start: np.ndarray  # (m + 1,) prefix of triangle ranges
    hp_nx: np.ndarray
    hp_ny: np.ndarray
    hp_c: np.ndarray
    origin_z: float
    n_occluders: int


def pack_scene(scene: Scene) -> PackedScene:
    m = len(scene.occluders)
    n = len(scene.triangles)
    ax = np.empty(n)
    ay = np.empty(n)
    bx = np.empty(n)
    by = np.empty(n)
    cx = np.empty(n)
    cy = np.empty(n)
    z = np.empty(n)
    tri_occ = np.empty(n, dtype=np.int64)
    occ_start = np.zeros(m + 1, dtype=np.int64)
    for i, t in enumerate(scene.triangles):
        ax[i] = t.v0.x
        ay[i] = t.v0.y
        bx[i] = t.v1.x
        by[i] = t.v1.y
        cx[i] = t.v2.x
        cy[i] = t.v2.y
        z[i] = t.z
        tri_occ[i] = t.occluder_ord
        occ_start[t.occluder_ord] += 1
    occ_start = np.cumsum(occ_start)
    hp_nx = np.array([o.halfplane.nx for o in scene.occluders])
    hp_ny = np.array([o.halfplane.ny for o in scene.occluders])
    hp_c = np.array([o.halfplane.c for o in scene.occluders])
    return PackedScene(ax, ay, bx, by, cx, cy, z, tri_occ, occ_start,
                       hp_nx, hp_ny, hp_c, scene.origin_z, m)


@dataclass
class Bvh:
    """Binary tree in flat arrays; left < 0 marks a leaf holding the perm
    slice [start, start + count)."""

    node_minx: np.ndarray
    node_miny: np.ndarray
    node_maxx: np.ndarray
    node_maxy: np.ndarray
    node_left: np.ndarray
    node_right: np.ndarray
    node_start: np.ndarray
    node_count: np.ndarray
    perm: np.ndarray


def build_bvh(packed: PackedScene, leaf_size: int = LEAF_SIZE) -> Bvh:
    """Median split on the longest centroid axis; boxes only track x and y
    because query rays are vertical and span every layer."""
    n = len(packed.ax)
    tminx = np.minimum(np.minimum(packed.ax, packed.bx), packed.cx)
    tmaxx = np.maximum(np.maximum(packed.ax, packed.bx), packed.cx)
    tminy = np.minimum(np.minimum(packed.ay, packed.by), packed.cy)
    tmaxy = np.maximum(np.maximum(packed.ay, packed.by), packed.cy)
    cenx = (packed.ax + packed.bx + packed.cx) / 3.0
    ceny = (packed.ay + packed.by + packed.cy) / 3.0

    perm = np.arange(n, dtype=np.int64)
    nodes: list[tuple] = []

    def rec(lo: int, hi: int, depth: int) -> int:
        idx = len(nodes)
        nodes.append(())
        sl = perm[lo:hi]
        bminx = float(tminx[sl].min())
        bminy = float(tminy[sl].min())
        bmaxx = float(tmaxx[sl].max())
        bmaxy = float(tmaxy[sl].max())
        if hi - lo <= leaf_size or depth >= MAX_DEPTH:
            nodes[idx] = (bminx, bminy, bmaxx, bmaxy, -1, -1, lo, hi - lo)
            return idx
        ex = float(cenx[sl].max() - cenx[sl].min())
        ey = float(ceny[sl].max() - ceny[sl].min())
        key = cenx[sl] if ex >= ey else ceny[sl]
        perm[lo:hi] = sl[np.argsort(key, kind="stable")]
        mid = lo + (hi - lo) // 2
        left = rec(lo, mid, depth + 1)
        right = rec(mid, hi, depth + 1)
        nodes[idx] = (bminx, bminy, bmaxx, bmaxy, left, right, lo, hi - lo)
        return idx

    if n > 0:
        rec(0, n, 0)
    arr = np.array(nodes, dtype=np.float64) if nodes else np.empty((0, 8))
    return Bvh(
        node_minx=arr[:, 0].copy(),
        node_miny=arr[:, 1].copy(),
        node_maxx=arr[:, 2].copy(),
        node_maxy=arr[:, 3].copy(),
        node_left=arr[:, 4].astype(np.int64),
        node_right=arr[:, 5].astype(np.int64),
        node_start=arr[:, 6].astype(np.int64),
        node_count=arr[:, 7].astype(np.int64),
        perm=perm,
    )
