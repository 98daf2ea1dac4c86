"""Compiled counting kernels.

Every containment predicate here must agree bit-for-bit with the pure
Python versions in geometry.py and zone.py: the edge orientation is
canonicalized by lexicographic vertex order so that both triangles sharing
an edge, and both the compiled and interpreted paths, evaluate the same
float expression.  Keep the formulas in sync when touching either side.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(inline="always", cache=True)
def _edge_cross(ax: float, ay: float, bx: float, by: float,
                x: float, y: float) -> float:
    if ax < bx or (ax == bx and ay <= by):
        return (bx - ax) * (y - ay) - (by - ay) * (x - ax)
    return -((ax - bx) * (y - by) - (ay - by) * (x - bx))


@njit(inline="always", cache=True)
def _tri_contains(t: int, x: float, y: float,
                  ax, ay, bx, by, cx, cy) -> bool:
    d0 = _edge_cross(ax[t], ay[t], bx[t], by[t], x, y)
    d1 = _edge_cross(bx[t], by[t], cx[t], cy[t], x, y)
    d2 = _edge_cross(cx[t], cy[t], ax[t], ay[t], x, y)
    has_neg = (d0 < 0.0) or (d1 < 0.0) or (d2 < 0.0)
    has_pos = (d0 > 0.0) or (d1 > 0.0) or (d2 > 0.0)
    return not (has_neg and has_pos)


@njit(nogil=True, cache=True)
def count_hits_bvh(px, py, out, limit,
                   ax, ay, bx, by, cx, cy, tri_occ, occ_start,
                   hp_nx, hp_ny, hp_c,
                   node_minx, node_miny, node_maxx, node_maxy,
                   node_left, node_right, node_start, node_count, perm):
    """Per ray: occluders hit strictly on the invalid side, counted once
    each (the lowest-index containing triangle of an occluder claims the
    point), stopping at limit."""
    n_nodes = len(node_left)
    stack = np.empty(128, dtype=np.int64)
    for u in range(len(px)):
        x = px[u]
        y = py[u]
        count = 0
        if n_nodes > 0:
            top = 0
            stack[0] = 0
            while top >= 0:
                node = stack[top]
                top -= 1
                if (x < node_minx[node] or x > node_maxx[node]
                        or y < node_miny[node] or y > node_maxy[node]):
                    continue
                left = node_left[node]
                if left >= 0:
                    top += 1
                    stack[top] = left
                    top += 1
                    stack[top] = node_right[node]
                    continue
                lo = node_start[node]
                done = False
                for s in range(lo, lo + node_count[node]):
                    t = perm[s]
                    o = tri_occ[t] - 1
                    if hp_nx[o] * x + hp_ny[o] * y - hp_c[o] <= 0.0:
                        continue
                    if not _tri_contains(t, x, y, ax, ay, bx, by, cx, cy):
                        continue
                    first = True
                    for j in range(occ_start[o], t):
                        if _tri_contains(j, x, y, ax, ay, bx, by, cx, cy):
                            first = False
                            break
                    if not first:
                        continue
                    count += 1
                    if count >= limit:
                        done = True
                        break
                if done:
                    break
        out[u] = count


@njit(nogil=True, cache=True)
def count_hits_linear(px, py, out, limit,
                      ax, ay, bx, by, cx, cy, occ_start,
                      hp_nx, hp_ny, hp_c):
    """Reference path: scan occluders in order, no tree, no permutation."""
    m = len(hp_nx)
    for u in range(len(px)):
        x = px[u]
        y = py[u]
        count = 0
        for o in range(m):
            if hp_nx[o] * x + hp_ny[o] * y - hp_c[o] <= 0.0:
                continue
            for t in range(occ_start[o], occ_start[o + 1]):
                if _tri_contains(t, x, y, ax, ay, bx, by, cx, cy):
                    count += 1
                    break
            if count >= limit:
                break
        out[u] = count


@njit(nogil=True, cache=True)
def zone_membership(px, py, out, vx, vy, piece_start,
                    pminx, pminy, pmaxx, pmaxy):
    """Closed membership of each point in any convex CCW piece."""
    n_pieces = len(piece_start) - 1
    for u in range(len(px)):
        x = px[u]
        y = py[u]
        hit = False
        for p in range(n_pieces):
            if (x < pminx[p] or x > pmaxx[p]
                    or y < pminy[p] or y > pmaxy[p]):
                continue
            lo = piece_start[p]
            hi = piece_start[p + 1]
            inside = True
            for i in range(lo, hi):
                j = i + 1 if i + 1 < hi else lo
                if _edge_cross(vx[i], vy[i], vx[j], vy[j], x, y) < 0.0:
                    inside = False
                    break
            if inside:
                hit = True
                break
        out[u] = hit


@njit(nogil=True, cache=True)
def arc_verify(px, py, qx, qy, fx, fy, flow, k, out):
    """Verification walk for the arc-sweep baseline.  Facilities arrive
    sorted ascending by their lower crossing bound; a candidate stops early
    once that bound reaches its own distance from the query (no later
    facility can lie strictly closer), or once k closer facilities are
    seen."""
    for u in range(len(px)):
        x = px[u]
        y = py[u]
        dq2 = (x - qx) * (x - qx) + (y - qy) * (y - qy)
        du = np.sqrt(dq2)
        count = 0
        for i in range(len(fx)):
            if flow[i] >= du:
                break
            dx = x - fx[i]
            dy = y - fy[i]
            if dx * dx + dy * dy < dq2:
                count += 1
                if count >= k:
                    break
        out[u] = count
