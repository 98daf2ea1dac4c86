"""Exact reference algorithms.

Three independent routes to the same answer: a brute-force distance-count
oracle (plain numpy, deliberately simple), membership in the maintained
zone arrangement, and an angular arc-sweep with per-partition distance
bounds.  The engine is checked against all of them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import arc_verify, count_hits_linear, zone_membership
from .errors import CoincidentFacilities
from .geometry import Occluder, Point2, Rect, point_in_occluder
from .raycast import HitReport
from .scene import PackedScene
from .zone import EXACT, pack_zone_pieces, select_facilities

ORACLE_BLOCK: int = 1 << 24  # cap on rows x facilities per distance block


def oracle_rknn(F: np.ndarray, U: np.ndarray, q_index: int, k: int) -> np.ndarray:
    """Brute force: a user is a result when fewer than k facilities sit
    strictly closer to it than the query does."""
    F = np.asarray(F, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    q = F[q_index]
    f2 = (F * F).sum(axis=1)
    chunk = max(1, ORACLE_BLOCK // max(1, len(F)))
    hits = []
    for lo in range(0, len(U), chunk):
        rows = U[lo:lo + chunk]
        # squared distances via |u|^2 - 2 u.a + |a|^2; the |u|^2 term is
        # shared by both sides of every comparison and cancels
        cross = rows @ F.T
        s = f2[None, :] - 2.0 * cross
        sq = s[:, q_index]
        counts = (s < sq[:, None]).sum(axis=1)
        hits.append(np.nonzero(counts < k)[0] + lo)
    return np.concatenate(hits) if hits else np.empty(0, dtype=np.int64)


def direct_count(occluders: list[Occluder], u: Point2, q: Point2,
                 k: int) -> HitReport:
    """Tree-free reference for count_hits: scan every occluder, clip at k.
    q is part of the call shape for symmetry with the ray route; the
    occluders already encode it."""
    count = 0
    for occ in occluders:
        if point_in_occluder(occ, u):
            count += 1
            if count >= k:
                break
    return HitReport(count, count < k)


def direct_counts(packed: PackedScene, users: np.ndarray) -> np.ndarray:
    """Unclipped occluder counts by plain per-occluder scan, no tree."""
    users = np.ascontiguousarray(users, dtype=np.float64)
    out = np.zeros(len(users), dtype=np.int64)
    if len(users) == 0 or packed.n_occluders == 0:
        return out
    count_hits_linear(np.ascontiguousarray(users[:, 0]),
                      np.ascontiguousarray(users[:, 1]),
                      out, np.int64(packed.n_occluders + 1),
                      packed.ax, packed.ay, packed.bx, packed.by,
                      packed.cx, packed.cy, packed.occ_start,
                      packed.hp_nx, packed.hp_ny, packed.hp_c)
    return out


def infzone_rknn(F: np.ndarray, U: np.ndarray, q_index: int, k: int,
                 rect: Rect) -> np.ndarray:
    """Exact zone construction, then point-in-zone membership for users."""
    sel = select_facilities(np.asarray(F, dtype=np.float64), q_index, k,
                            rect, EXACT)
    U = np.ascontiguousarray(np.asarray(U, dtype=np.float64))
    if len(U) == 0:
        return np.empty(0, dtype=np.int64)
    if not sel.zone.pieces:
        return np.empty(0, dtype=np.int64)
    vx, vy, start, pminx, pminy, pmaxx, pmaxy = pack_zone_pieces(sel.zone)
    out = np.zeros(len(U), dtype=np.bool_)
    zone_membership(np.ascontiguousarray(U[:, 0]),
                    np.ascontiguousarray(U[:, 1]),
                    out, vx, vy, start, pminx, pminy, pmaxx, pmaxy)
    return np.nonzero(out)[0].astype(np.int64)


N_PARTITIONS: int = 12


def slice_arcs(f: Point2, q: Point2, partition: tuple[float, float]
               ) -> tuple[float, float]:
    """Distance band, measured from q, inside which the bisector of f can
    cross rays whose angle lies in [theta_lo, theta_hi)."""
    theta_lo, theta_hi = partition
    dx = f.x - q.x
    dy = f.y - q.y
    d2 = dx * dx + dy * dy
    if d2 == 0.0:
        raise CoincidentFacilities("facility coincides with query")

    def crossing(theta: float) -> float:
        den = dx * math.cos(theta) + dy * math.sin(theta)
        if den <= 0.0:
            return math.inf
        return d2 / (2.0 * den)

    t_lo = crossing(theta_lo)
    t_hi = crossing(theta_hi)
    upper = max(t_lo, t_hi)
    theta_f = math.atan2(dy, dx) % (2.0 * math.pi)
    two_pi = 2.0 * math.pi
    lo = theta_lo % two_pi
    hi = theta_hi % two_pi
    if lo <= hi:
        inside = lo <= theta_f < hi
    else:  # wrapped interval
        inside = theta_f >= lo or theta_f < hi
    lower = 0.5 * math.sqrt(d2) if inside else min(t_lo, t_hi)
    return lower, upper


@dataclass
class SlicePartitionState:
    """Per-partition data: facility bounds, pruning arc, and the
    verification list sorted by lower bound."""

    theta_lo: float
    theta_hi: float
    lower: np.ndarray
    upper: np.ndarray
    arc: float
    sig_order: np.ndarray  # facility rows sorted ascending by lower


def build_partitions(F: np.ndarray, q_index: int, k: int,
                     n_partitions: int = N_PARTITIONS
                     ) -> tuple[list[SlicePartitionState], np.ndarray]:
    """Bounds for every partition; returns states plus the rows of F that
    participate (everything but the query and its coincident twins)."""
    F = np.asarray(F, dtype=np.float64)
    q = Point2(float(F[q_index, 0]), float(F[q_index, 1]))
    keep = [i for i in range(len(F))
            if not (F[i, 0] == q.x and F[i, 1] == q.y)]
    others = np.array(keep, dtype=np.int64)
    step = 2.0 * math.pi / n_partitions
    states = []
    for p in range(n_partitions):
        lo_a = p * step
        # the top edge of the last partition is exactly the full turn, so
        # angles binned by floor division stay bracketed despite rounding
        hi_a = 2.0 * math.pi if p == n_partitions - 1 else (p + 1) * step
        lower = np.empty(len(others))
        upper = np.empty(len(others))
        for j, i in enumerate(others):
            lower[j], upper[j] = slice_arcs(
                Point2(float(F[i, 0]), float(F[i, 1])), q, (lo_a, hi_a))
        finite = np.sort(upper[np.isfinite(upper)])
        arc = float(finite[k - 1]) if len(finite) >= k else math.inf
        sig = np.nonzero(lower < arc)[0] if math.isfinite(arc) \
            else np.arange(len(others))
        order = sig[np.argsort(lower[sig], kind="stable")]
        states.append(SlicePartitionState(lo_a, hi_a, lower, upper, arc, order))
    return states, others


def slice_rknn(F: np.ndarray, U: np.ndarray, q_index: int, k: int,
               n_partitions: int = N_PARTITIONS) -> np.ndarray:
    """Arc-sweep: prune users beyond their partition's bounding arc, then
    verify survivors against the partition's sorted facility list."""
    F = np.asarray(F, dtype=np.float64)
    U = np.ascontiguousarray(np.asarray(U, dtype=np.float64))
    if len(U) == 0:
        return np.empty(0, dtype=np.int64)
    states, others = build_partitions(F, q_index, k, n_partitions)
    qx, qy = float(F[q_index, 0]), float(F[q_index, 1])
    du = np.hypot(U[:, 0] - qx, U[:, 1] - qy)
    theta = np.arctan2(U[:, 1] - qy, U[:, 0] - qx) % (2.0 * math.pi)
    step = 2.0 * math.pi / n_partitions
    part = np.minimum((theta / step).astype(np.int64), n_partitions - 1)

    result = np.zeros(len(U), dtype=bool)
    for p, st in enumerate(states):
        rows = np.nonzero((part == p) & (du <= st.arc))[0]
        if len(rows) == 0:
            continue
        if len(st.sig_order) == 0:
            result[rows] = True
            continue
        sel = others[st.sig_order]
        counts = np.zeros(len(rows), dtype=np.int64)
        arc_verify(np.ascontiguousarray(U[rows, 0]),
                   np.ascontiguousarray(U[rows, 1]),
                   qx, qy,
                   np.ascontiguousarray(F[sel, 0]),
                   np.ascontiguousarray(F[sel, 1]),
                   np.ascontiguousarray(st.lower[st.sig_order]),
                   np.int64(k), counts)
        result[rows[counts < k]] = True
    return np.nonzero(result)[0].astype(np.int64)
