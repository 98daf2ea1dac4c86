"""Release gate: ten end-to-end checks over the full pipeline.

Each test prints one summary line (PASS/FAIL with the measured numbers)
even when pytest captures output, so a gate run reads as a checklist.
Checks 1-9 gate the build; check 10 covers the optional single-set
extension and reports without gating.
"""
import contextlib
import io
import math

import numpy as np
import pytest

import rknncast.cli as cli
from rknncast.baselines import oracle_rknn
from rknncast.data import SplitSpec, gen_synthetic, split_facilities
from rknncast.engine import QueryConfig, domain_rect, mono_rknn_query, rknn_query
from rknncast.geometry import Point2, Rect, bisector, build_occluder, point_in_occluder
from rknncast.raycast import cast_all, cast_counts
from rknncast.scene import assemble_scene, build_bvh, pack_scene
from rknncast.zone import (
    EXACT,
    NO_PRUNING,
    pack_zone_pieces,
    select_facilities,
    zone_init,
    zone_insert,
)
from rknncast._kernels import zone_membership

RECT_HI = 10_000.0
R_BIG = Rect(Point2(0.0, 0.0), Point2(RECT_HI, RECT_HI))

# instance grid shared by checks 1 and 6: (facility count, dataset size)
SWEEP = ((10, 10_010), (100, 10_100), (1000, 11_000))
SWEEP_KS = (1, 2, 5, 10, 25)
SWEEP_QUERIES = 50


def report(num: int, ok: bool, detail: str, capsys) -> None:
    line = f"criterion {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}"
    with capsys.disabled():
        print(line, flush=True)


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    # compile the jit kernels before anything that measures time
    rng = np.random.default_rng(0)
    F = rng.uniform(0.0, 100.0, size=(20, 2))
    U = rng.uniform(0.0, 100.0, size=(50, 2))
    rknn_query(F, U, 0, QueryConfig(k=2))
    rknn_query(F, U, 0, QueryConfig(k=2, use_bvh=False))


def test_criterion_01_all_routes_match_brute_force(capsys):
    """Engine under every strategy, zone membership, and the arc sweep
    reproduce the brute-force result set exactly, via the verify command."""
    checked = 0
    for i, (n_fac, n_pts) in enumerate(SWEEP):
        argv = ["verify", "--gen", f"uniform:{n_pts}",
                "--facilities", str(n_fac),
                "--k", ",".join(str(k) for k in SWEEP_KS),
                "--queries", str(SWEEP_QUERIES),
                "--facility-seed", str(101 + i)]
        buf, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(err):
            rc = cli.main(argv)
        out = buf.getvalue()
        assert rc == 0, f"verify exited {rc} for |F|={n_fac}:\n{out[-2000:]}"
        assert "0 mismatches" in out
        checked += out.count("| diff")
    ok = checked == len(SWEEP) * len(SWEEP_KS) * SWEEP_QUERIES
    report(1, ok, f"{checked} verify lines, every set difference empty", capsys)
    assert ok


def test_criterion_02_hit_counts_equal_closer_counts(capsys):
    """Unpruned, untruncated ray counts equal the exact number of strictly
    closer facilities for every user off the bisector band."""
    rng = np.random.default_rng(7)
    F = rng.uniform(0.0, RECT_HI, size=(200, 2))
    U = rng.uniform(0.0, RECT_HI, size=(10_000, 2))
    rect = domain_rect(F, U)
    diag = math.hypot(rect.max.x - rect.min.x, rect.max.y - rect.min.y)
    f2 = (F * F).sum(axis=1)
    s_all = f2[None, :] - 2.0 * U @ F.T  # squared distance minus |u|^2
    queries = rng.choice(len(F), size=11, replace=False)
    pairs = 0
    violations = 0
    for qi in queries:
        q_index = int(qi)
        exact = (s_all < s_all[:, q_index:q_index + 1]).sum(axis=1)
        sel = select_facilities(F, q_index, 1, rect, NO_PRUNING)
        packed = pack_scene(assemble_scene(sel.occluders))
        bvh = build_bvh(packed)
        m = packed.n_occluders
        counts = cast_counts(bvh, packed, U, m + 1, early_termination=False)
        # distance from each user to each bisector line, for the exclusion band
        N = np.array([[o.halfplane.nx, o.halfplane.ny] for o in sel.occluders])
        c = np.array([o.halfplane.c for o in sel.occluders])
        norms = np.hypot(N[:, 0], N[:, 1])
        dist = np.abs(U @ N.T - c) / norms
        off_band = dist.min(axis=1) > 1e-9 * diag
        pairs += int(off_band.sum())
        violations += int((counts[off_band] != exact[off_band]).sum())
    ok = violations == 0 and pairs >= 100_000
    report(2, ok, f"{pairs} (user, query) pairs off-band, "
                  f"{violations} count mismatches", capsys)
    assert ok


def _stratified_pair(rng, stratum):
    """Facility/query pair whose occluder takes a requested construction
    route; resamples until the route is hit."""
    for _ in range(1000):
        qx, qy = rng.uniform(100.0, RECT_HI - 100.0, size=2)
        if stratum == "axis-x":
            dx = rng.uniform(-4000.0, 4000.0)
            if dx == 0.0:
                continue
            a = Point2(qx + dx, qy)
        elif stratum == "axis-y":
            dy = rng.uniform(-4000.0, 4000.0)
            if dy == 0.0:
                continue
            a = Point2(qx, qy + dy)
        elif stratum == "general":
            ax, ay = rng.uniform(0.0, RECT_HI, size=2)
            if ax == qx or ay == qy:
                continue
            a = Point2(float(ax), float(ay))
        else:  # fan: near-degenerate normal pushes a crossing far away
            eps = rng.uniform(1e-8, 1e-6) * (1 if rng.random() < 0.5 else -1)
            dy = rng.uniform(500.0, 4000.0) * (1 if rng.random() < 0.5 else -1)
            a = Point2(qx + eps, qy + dy)
        q = Point2(float(qx), float(qy))
        occ = build_occluder(a, q, R_BIG, facility_id=0)
        if occ is None:
            continue
        want = {"axis-x": "axis", "axis-y": "axis",
                "general": "single", "fan": "fan"}[stratum]
        if occ.case != want and not (stratum == "general" and occ.case == "fan"):
            continue
        return a, q, occ
    raise AssertionError(f"could not generate stratum {stratum}")


def test_criterion_03_occluders_tile_the_invalid_side(capsys):
    """Across all construction routes, triangle membership equals the
    strict half-plane test off the band, and every strictly invalid
    domain corner is covered."""
    rng = np.random.default_rng(11)
    diag = math.hypot(RECT_HI, RECT_HI)
    band = 1e-9 * diag
    strata = ("axis-x", "axis-y", "general", "fan")
    pairs_per = 2500
    checked_points = 0
    corner_misses = 0
    mismatches = 0
    for stratum in strata:
        for _ in range(pairs_per):
            a, q, occ = _stratified_pair(rng, stratum)
            h = occ.halfplane
            norm = math.hypot(h.nx, h.ny)
            for corner in R_BIG.corners():
                if h.eval(corner) > 0.0 and not point_in_occluder(occ, corner):
                    corner_misses += 1
            pts = rng.uniform(0.0, RECT_HI, size=(100, 2))
            ev = h.nx * pts[:, 0] + h.ny * pts[:, 1] - h.c
            for j in range(100):
                if abs(ev[j]) / norm <= band:
                    continue
                checked_points += 1
                inside = point_in_occluder(occ, Point2(pts[j, 0], pts[j, 1]))
                if inside != (ev[j] > 0.0):
                    mismatches += 1
    ok = mismatches == 0 and corner_misses == 0
    report(3, ok, f"{len(strata) * pairs_per} pairs, {checked_points} points, "
                  f"{mismatches} membership mismatches, "
                  f"{corner_misses} uncovered corners", capsys)
    assert ok


def test_criterion_04_zone_tracks_coverage_exactly(capsys):
    """After every accepted insertion, zone membership matches "fewer than
    k accepted competitors strictly closer" on a fixed point sample.
    Rejected insertions change neither side of the equivalence."""
    rect = Rect(Point2(0.0, 0.0), Point2(100.0, 100.0))
    diag = math.hypot(100.0, 100.0)
    n_seq = 1000
    n_pts = 10_000
    checks = 0
    violations = 0
    for i in range(n_seq):
        rng = np.random.default_rng(10_000 + i)
        k = 1 + i % 10
        q = Point2(float(rng.uniform(5, 95)), float(rng.uniform(5, 95)))
        zone = zone_init(rect, k, q)
        pts = rng.uniform(0.0, 100.0, size=(n_pts, 2))
        px = np.ascontiguousarray(pts[:, 0])
        py = np.ascontiguousarray(pts[:, 1])
        counts = np.zeros(n_pts, dtype=np.int64)
        in_band = np.zeros(n_pts, dtype=bool)
        n_bis = int(rng.integers(10, 51))
        for _ in range(n_bis):
            ax, ay = rng.uniform(0.0, 100.0, size=2)
            if ax == q.x and ay == q.y:
                continue
            h = bisector(Point2(float(ax), float(ay)), q)
            if not zone_insert(zone, 0, h):
                continue
            ev = h.nx * px + h.ny * py - h.c
            counts += ev > 0.0
            in_band |= np.abs(ev) / math.hypot(h.nx, h.ny) <= 1e-9 * diag
            inside = np.zeros(n_pts, dtype=np.bool_)
            if zone.pieces:
                vx, vy, start, bx0, by0, bx1, by1 = pack_zone_pieces(zone)
                zone_membership(px, py, inside, vx, vy, start,
                                bx0, by0, bx1, by1)
            good = ~in_band
            checks += int(good.sum())
            violations += int((inside[good] != (counts[good] < k)).sum())
    ok = violations == 0
    report(4, ok, f"{n_seq} insertion sequences, {checks} point checks, "
                  f"{violations} coverage violations", capsys)
    assert ok


def test_criterion_05_pruning_keeps_occluder_counts_flat(capsys):
    """On a large clustered instance (synthetic stand-in; the road-network
    source is not bundled), the exact strategy accepts a few dozen
    occluders regardless of facility count, and no-pruning accepts
    everything except the query and exact-coordinate twins."""
    ds = gen_synthetic(260_000, "clusters", 7)
    means = {}
    for n_fac in (100, 1000, 10_000):
        F, U = split_facilities(ds, SplitSpec(n_fac, 1))
        rect = domain_rect(F, U)
        rng = np.random.default_rng(2)
        qs = rng.choice(n_fac, size=100, replace=False)
        acc = [len(select_facilities(F, int(qi), 10, rect, EXACT).occluders)
               for qi in qs]
        means[n_fac] = float(np.mean(acc))
        q0 = int(qs[0])
        coincident = int((np.all(F == F[q0], axis=1)).sum()) - 1
        none_n = len(select_facilities(F, q0, 10, rect, NO_PRUNING).occluders)
        assert none_n == n_fac - 1 - coincident
    growth = means[10_000] / means[100]
    ok = all(15.0 <= m <= 150.0 for m in means.values()) and growth < 2.0
    report(5, ok, "clustered stand-in (road-network data not bundled): "
                  f"mean accepted {means[100]:.1f} / {means[1000]:.1f} / "
                  f"{means[10_000]:.1f} at |F|=1e2/1e3/1e4, "
                  f"growth {growth:.2f}x", capsys)
    assert ok


def test_criterion_06_termination_and_traversal_equivalence(capsys):
    """Early termination on/off and tree vs linear traversal give
    bit-identical result masks on the full verification sweep."""
    instances = 0
    for i, (n_fac, n_pts) in enumerate(SWEEP):
        ds = gen_synthetic(n_pts, "uniform", 101 + i)
        F, U = split_facilities(ds, SplitSpec(n_fac, 101 + i))
        rect = domain_rect(F, U)
        rng = np.random.default_rng(102 + i)
        qs = rng.choice(n_fac, size=SWEEP_QUERIES,
                        replace=SWEEP_QUERIES > n_fac)
        for k in SWEEP_KS:
            for qi in qs:
                sel = select_facilities(F, int(qi), k, rect, EXACT)
                packed = pack_scene(assemble_scene(sel.occluders))
                bvh = build_bvh(packed)
                base = cast_all(bvh, packed, U, k,
                                early_termination=True, use_bvh=True)
                for early, tree in ((True, False), (False, True),
                                    (False, False)):
                    other = cast_all(bvh if tree else None, packed, U, k,
                                     early_termination=early, use_bvh=tree)
                    assert np.array_equal(base, other), \
                        f"mask drift at |F|={n_fac} k={k} q={int(qi)} " \
                        f"early={early} tree={tree}"
                instances += 1
    ok = instances == len(SWEEP) * len(SWEEP_KS) * SWEEP_QUERIES
    report(6, ok, f"{instances} instances x 4 cast modes, all masks "
                  "bit-identical", capsys)
    assert ok


def test_criterion_07_parallel_and_repeat_determinism(tmp_path, capsys):
    """Worker count never changes the mask, and repeated benchmark runs
    agree byte-for-byte outside the timing columns."""
    rng = np.random.default_rng(19)
    F = rng.uniform(0.0, RECT_HI, size=(100, 2))
    U = rng.uniform(0.0, RECT_HI, size=(1_000_000, 2))
    rect = domain_rect(F, U)
    sel = select_facilities(F, 0, 10, rect, EXACT)
    packed = pack_scene(assemble_scene(sel.occluders))
    bvh = build_bvh(packed)
    base = cast_all(bvh, packed, U, 10, workers=1)
    worker_ok = all(
        np.array_equal(base, cast_all(bvh, packed, U, 10, workers=w))
        for w in (2, 8))

    non_timing = []
    timing = {"t_occluder_ms", "t_bvh_ms", "t_cast_ms", "t_transfer_ms",
              "t_total_ms"}
    keep = [i for i, c in enumerate(cli.COLUMNS) if c not in timing]
    for rep in range(3):
        out = tmp_path / f"rep{rep}.csv"
        argv = ["bench", "--gen", "uniform:3000", "--facilities", "50",
                "--k", "2,5", "--queries", "5", "--out", str(out)]
        with contextlib.redirect_stderr(io.StringIO()):
            assert cli.main(argv) == 0
        rows = [ln.split(",") for ln in out.read_text().splitlines()]
        non_timing.append([[r[i] for i in keep] for r in rows])
    bench_ok = non_timing[0] == non_timing[1] == non_timing[2]
    ok = worker_ok and bench_ok
    report(7, ok, f"masks equal for 1/2/8 workers on 1e6 users: {worker_ok}; "
                  f"3 bench runs identical outside timings: {bench_ok}", capsys)
    assert ok


def _mean_cast_ms(F, U, k, queries, rect) -> float:
    times = []
    for qi in queries:
        res = rknn_query(F, U, int(qi), QueryConfig(k=k), rect=rect)
        times.append(res.t_cast_ms)
    return float(np.mean(times))


def test_criterion_08_cast_time_flat_in_facility_count(capsys):
    """With exact pruning the scene stays small, so per-query cast time
    barely moves across two orders of magnitude in facility count."""
    rng = np.random.default_rng(23)
    U = rng.uniform(0.0, RECT_HI, size=(1_000_000, 2))
    means = {}
    for n_fac in (100, 1000, 10_000):
        F = rng.uniform(0.0, RECT_HI, size=(n_fac, 2))
        rect = domain_rect(F, U)
        queries = np.random.default_rng(29).choice(n_fac, size=5,
                                                   replace=False)
        means[n_fac] = _mean_cast_ms(F, U, 10, queries, rect)
    spread = max(means.values()) / min(means.values())
    ok = spread < 3.0
    report(8, ok, f"mean cast ms {means[100]:.0f} / {means[1000]:.0f} / "
                  f"{means[10_000]:.0f} at |F|=1e2/1e3/1e4, "
                  f"spread {spread:.2f}x (bound 3x)", capsys)
    assert ok


def test_criterion_09_cast_time_degrades_gently_in_k(capsys):
    """Raising k from 1 to 100 should cost less than 5x in cast time on
    the same instance.

    A software tracer pays per occluder actually pierced: at k=1 the
    pruned scene holds a handful of occluders and rays stop at the first
    hit, while k=100 on 100 facilities keeps all 99 occluders with no
    early stop, so the honest ratio lands far above the bound. The bound
    models hardware traversal, which this package does not claim; the
    check is kept and reported as measured."""
    rng = np.random.default_rng(31)
    F = rng.uniform(0.0, RECT_HI, size=(100, 2))
    U = rng.uniform(0.0, RECT_HI, size=(1_000_000, 2))
    rect = domain_rect(F, U)
    queries = np.random.default_rng(37).choice(100, size=5, replace=False)
    t1 = _mean_cast_ms(F, U, 1, queries, rect)
    t100 = _mean_cast_ms(F, U, 100, queries, rect)
    ratio = t100 / t1
    ok = ratio < 5.0
    report(9, ok, f"mean cast ms {t1:.1f} at k=1 vs {t100:.0f} at k=100, "
                  f"ratio {ratio:.1f}x (bound 5x)", capsys)
    assert ok, (
        f"cast-time ratio {ratio:.1f}x exceeds the 5x bound; scene size "
        "grows ~20x from k=1 to k=100 and every added occluder costs "
        "per-ray work in software"
    )


def _mono_brute(P: np.ndarray, q_index: int, k: int) -> list[int]:
    out = []
    for pi in range(len(P)):
        if pi == q_index:
            continue
        dq = ((P[pi] - P[q_index]) ** 2).sum()
        closer = 0
        for ai in range(len(P)):
            if ai in (pi, q_index):
                continue
            if ((P[pi] - P[ai]) ** 2).sum() < dq:
                closer += 1
        if closer < k:
            out.append(pi)
    return out


def test_criterion_10_single_set_variant_matches_brute_force(capsys):
    """Optional extension: the single-set query equals scalar brute force.
    Reported but non-gating."""
    failures = 0
    total = 0
    for n in (50, 200):
        rng = np.random.default_rng(n)
        P = rng.uniform(0.0, 100.0, size=(n, 2))
        queries = rng.choice(n, size=20, replace=False)
        for k in (1, 5):
            cfg = QueryConfig(k=k)
            for qi in queries:
                total += 1
                got = mono_rknn_query(P, int(qi), cfg).ids.tolist()
                if got != _mono_brute(P, int(qi), k):
                    failures += 1
    ok = failures == 0
    report(10, ok, f"{total} single-set queries, {failures} mismatches "
                   "(non-gating)", capsys)
    if not ok:
        pytest.xfail(f"non-gating: {failures} of {total} queries mismatched")
