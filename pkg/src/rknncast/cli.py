"""Command line interface: benchmarking, verification, dataset tooling.

Result tables go to stdout (or --out) as CSV or a JSON array; everything
about the run setup (seeds, split sizes, sampling choices) goes to stderr
so captured tables stay reproducible and machine readable.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from .baselines import infzone_rknn, oracle_rknn, slice_rknn
from .data import (
    Dataset,
    SplitSpec,
    gen_synthetic,
    load_points,
    save_cache,
    serialize_co,
    split_facilities,
)
from .engine import QueryConfig, domain_rect, rknn_query
from .geometry import Point2, Rect
from .scene import Bvh, assemble_scene, build_bvh, pack_scene
from .zone import PruningStrategy, select_facilities

ALGOS = ("rtrknn", "infzone", "slice", "oracle")
STRATEGY_KINDS = ("exact", "conservative", "none")


@dataclass
class BenchRow:
    dataset: str
    algo: str
    k: int
    facility_count: int
    user_count: int
    query_seq: object  # detail rows use ints, aggregate rows "mean"
    occluders_accepted: float
    t_occluder_ms: float
    t_bvh_ms: float
    t_cast_ms: float
    t_transfer_ms: float
    t_total_ms: float
    result_count: float


COLUMNS = [f.name for f in fields(BenchRow)]


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _parse_strategy(text: str) -> PruningStrategy:
    """exact | conservative[:budget] | none"""
    kind, _, budget = text.partition(":")
    if kind not in STRATEGY_KINDS:
        raise argparse.ArgumentTypeError(
            f"strategy must be one of {'|'.join(STRATEGY_KINDS)}")
    if budget:
        if kind != "conservative":
            raise argparse.ArgumentTypeError(
                "only conservative takes a :budget suffix")
        try:
            n = int(budget)
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"bad conservative budget {budget!r}") from None
        if n < 0:
            raise argparse.ArgumentTypeError("budget must be >= 0")
        return PruningStrategy("conservative", exact_budget=n)
    return PruningStrategy(kind)


def _parse_gen_arg(text: str) -> tuple[str, int]:
    """kind:count, e.g. uniform:10000 or clusters:50000"""
    kind, _, count = text.partition(":")
    if kind not in ("uniform", "clusters") or not count:
        raise argparse.ArgumentTypeError(
            f"--gen takes uniform:N or clusters:N, got {text!r}")
    try:
        n = int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad point count {count!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError("point count must be >= 0")
    return kind, n


def _parse_k_list(text: str) -> list[int]:
    ks = [int(tok) for tok in text.split(",") if tok]
    if not ks or any(k < 1 for k in ks):
        raise argparse.ArgumentTypeError("k values must be positive integers")
    return ks


def _parse_rect(text: str) -> Rect:
    parts = [float(tok) for tok in text.split(",")]
    if len(parts) != 4 or parts[0] >= parts[2] or parts[1] >= parts[3]:
        raise argparse.ArgumentTypeError(
            "rect is x0,y0,x1,y1 with x0 < x1 and y0 < y1")
    return Rect(Point2(parts[0], parts[1]), Point2(parts[2], parts[3]))


def _sample_queries(n_fac: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if count <= n_fac:
        _note(f"query sampling: without replacement (count {count} <= "
              f"facilities {n_fac}), seed {seed}")
        return rng.choice(n_fac, size=count, replace=False)
    _note(f"query sampling: with replacement (count {count} > "
          f"facilities {n_fac}), seed {seed}")
    return rng.choice(n_fac, size=count, replace=True)


def _run_algo(algo: str, F, U, q_index: int, k: int, rect, cfg: QueryConfig
              ) -> BenchRow:
    if algo == "rtrknn":
        res = rknn_query(F, U, q_index, cfg, rect=rect)
        return BenchRow("", algo, k, len(F), len(U), 0,
                        res.occluders_accepted, res.t_occluder_ms,
                        res.t_bvh_ms, res.t_cast_ms, res.t_transfer_ms,
                        res.t_total_ms, len(res.ids))
    t0 = time.perf_counter()
    if algo == "oracle":
        ids = oracle_rknn(F, U, q_index, k)
    elif algo == "infzone":
        ids = infzone_rknn(F, U, q_index, k, rect)
    elif algo == "slice":
        ids = slice_rknn(F, U, q_index, k)
    else:
        raise ValueError(f"unknown algo {algo!r}")
    total = (time.perf_counter() - t0) * 1e3
    return BenchRow("", algo, k, len(F), len(U), 0, 0, 0.0, 0.0, 0.0, 0.0,
                    total, len(ids))


def _emit(rows: list[BenchRow], fmt: str, out_path: str | None) -> None:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([getattr(row, c) for c in COLUMNS])
        text = buf.getvalue()
    else:
        text = json.dumps([asdict(r) for r in rows], indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _mean_rows(rows: list[BenchRow]) -> list[BenchRow]:
    groups: dict[tuple, list[BenchRow]] = {}
    for row in rows:
        groups.setdefault((row.k, row.algo), []).append(row)
    out = []
    for (k, algo), grp in groups.items():
        def avg(col: str) -> float:
            return float(np.mean([getattr(r, col) for r in grp]))

        out.append(BenchRow(grp[0].dataset, algo, k, grp[0].facility_count,
                            grp[0].user_count, "mean",
                            avg("occluders_accepted"), avg("t_occluder_ms"),
                            avg("t_bvh_ms"), avg("t_cast_ms"),
                            avg("t_transfer_ms"), avg("t_total_ms"),
                            avg("result_count")))
    return out


def _load_instance_dataset(args) -> Dataset:
    if args.dataset is not None:
        ds = load_points(args.dataset)
        _note(f"dataset: {args.dataset} ({len(ds)} points)")
        return ds
    kind, n = args.gen
    ds = gen_synthetic(n, kind, args.facility_seed)
    _note(f"dataset: synthetic {kind} n={n} seed {args.facility_seed}")
    return ds


def _query_seed(args) -> int:
    return args.query_seed if args.query_seed is not None \
        else args.facility_seed + 1


def _add_instance_args(sub: argparse.ArgumentParser) -> None:
    src = sub.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", default=None,
                     help="points file, text .co or binary cache")
    src.add_argument("--gen", type=_parse_gen_arg, default=None,
                     metavar="KIND:N",
                     help="synthesize instead, e.g. uniform:10000")
    sub.add_argument("--facilities", type=int, required=True)
    sub.add_argument("--facility-seed", type=int, default=0,
                     help="split sampling seed (also seeds --gen)")
    sub.add_argument("--query-seed", type=int, default=None,
                     help="query sampling seed (default facility-seed + 1)")
    sub.add_argument("--k", type=_parse_k_list, default=[1],
                     help="comma separated k values")
    sub.add_argument("--queries", type=int, default=10)
    sub.add_argument("--strategy", type=_parse_strategy,
                     default=PruningStrategy("exact"),
                     metavar="exact|conservative[:N]|none")
    sub.add_argument("--threads", type=int,
                     default=int(os.environ.get("RKNN_THREADS", "1")))


def _split_instance(args) -> tuple:
    ds = _load_instance_dataset(args)
    F, U = split_facilities(ds, SplitSpec(args.facilities, args.facility_seed))
    _note(f"split: {len(F)} facilities, {len(U)} users, "
          f"split seed {args.facility_seed}")
    return ds, F, U, domain_rect(F, U)


def cmd_bench(args) -> int:
    ds, F, U, rect = _split_instance(args)
    queries = _sample_queries(len(F), args.queries, _query_seed(args))
    _note(f"strategy: {args.strategy.kind}, threads: {args.threads}, "
          f"warmup: {args.warmup}")
    name = ds.name or "dataset"
    algos = [a for a in args.algo.split(",") if a]
    for a in algos:
        if a not in ALGOS:
            _note(f"unknown algo {a!r}; choose from {','.join(ALGOS)}")
            return 2

    rows: list[BenchRow] = []
    for k in args.k:
        cfg = QueryConfig(k=k, strategy=args.strategy, workers=args.threads)
        for algo in algos:
            for _ in range(args.warmup):
                _run_algo(algo, F, U, int(queries[0]), k, rect, cfg)
        for seq, q_index in enumerate(queries):
            for algo in algos:
                row = _run_algo(algo, F, U, int(q_index), k, rect, cfg)
                row.dataset = name
                row.query_seq = seq
                rows.append(row)
    rows.extend(_mean_rows(rows))
    _emit(rows, args.format, args.out)
    return 0


def cmd_verify(args) -> int:
    """Every route must reproduce the brute-force result set exactly:
    the engine under all three pruning strategies, plus each requested
    reference algorithm."""
    _, F, U, rect = _split_instance(args)
    queries = _sample_queries(len(F), args.queries, _query_seed(args))
    budget = args.strategy.exact_budget
    variants: list[tuple[str, object]] = [
        ("exact", PruningStrategy("exact")),
        ("conservative", PruningStrategy("conservative", exact_budget=budget)),
        ("none", PruningStrategy("none")),
    ]
    requested = [a for a in args.algo.split(",") if a]
    for a in requested:
        if a not in ALGOS:
            _note(f"unknown algo {a!r}; choose from {','.join(ALGOS)}")
            return 2
    if "infzone" in requested:
        variants.append(("infzone", None))
    if "slice" in requested:
        variants.append(("slice", None))

    mismatches = 0
    first_bad: tuple | None = None
    for k in args.k:
        for seq, qi in enumerate(queries):
            q_index = int(qi)
            want = oracle_rknn(F, U, q_index, k)
            want_set = set(want.tolist())
            parts = []
            bad = False
            for label, strategy in variants:
                if strategy is not None:
                    cfg = QueryConfig(k=k, strategy=strategy,
                                      workers=args.threads)
                    got = rknn_query(F, U, q_index, cfg, rect=rect).ids
                elif label == "infzone":
                    got = infzone_rknn(F, U, q_index, k, rect)
                else:
                    got = slice_rknn(F, U, q_index, k)
                diff = want_set.symmetric_difference(got.tolist())
                parts.append(f"{label}={len(diff)}")
                if diff:
                    bad = True
                    if first_bad is None:
                        first_bad = (label, k, q_index, min(diff))
            status = " MISMATCH" if bad else ""
            print(f"k={k} query_seq={seq} q_index={q_index} "
                  f"oracle={len(want)} | diff {' '.join(parts)}{status}")
            if bad:
                mismatches += 1
    if mismatches:
        label, k, q_index, user = first_bad
        print(f"first difference: variant={label} k={k} "
              f"q_index={q_index} user={user}")
        print(f"{mismatches} mismatches")
        return 1
    print("0 mismatches")
    return 0


def _bvh_depth(bvh: Bvh) -> int:
    n = len(bvh.node_left)
    if n == 0:
        return 0
    depth = 0
    stack = [(0, 1)]
    while stack:
        idx, d = stack.pop()
        depth = max(depth, d)
        if bvh.node_left[idx] >= 0:
            stack.append((int(bvh.node_left[idx]), d + 1))
            stack.append((int(bvh.node_right[idx]), d + 1))
    return depth


def cmd_stats(args) -> int:
    """Scene shape for one query: how many occluders each strategy keeps,
    the zone's final piece count, and the tree built over the stack."""
    ds, F, U, rect = _split_instance(args)
    queries = _sample_queries(len(F), args.queries, _query_seed(args))
    q_index = args.q_index if args.q_index is not None else int(queries[0])
    if not 0 <= q_index < len(F):
        _note(f"q_index {q_index} outside 0..{len(F) - 1}")
        return 2
    k = args.k[0]
    print(f"dataset: {ds.name or 'dataset'}")
    print(f"facilities: {len(F)}")
    print(f"users: {len(U)}")
    print(f"k: {k}")
    print(f"q_index: {q_index}")
    budget = args.strategy.exact_budget
    for label, strategy in (
            ("exact", PruningStrategy("exact")),
            ("conservative", PruningStrategy("conservative",
                                             exact_budget=budget)),
            ("none", PruningStrategy("none"))):
        sel = select_facilities(F, q_index, k, rect, strategy)
        packed = pack_scene(assemble_scene(sel.occluders))
        bvh = build_bvh(packed)
        pieces = len(sel.zone.pieces) if sel.zone is not None else 0
        print(f"strategy={label} occluders={len(sel.occluders)} "
              f"zone_pieces={pieces} "
              f"triangles={len(packed.ax)} "
              f"bvh_nodes={len(bvh.node_left)} bvh_depth={_bvh_depth(bvh)}")
        if args.dump and label == args.strategy.kind:
            for occ in sel.occluders:
                print(f"  occluder facility={occ.facility_id} "
                      f"case={occ.case} triangles={len(occ.triangles)}")
                for tri in occ.triangles:
                    print(f"    ({tri.v0.x!r},{tri.v0.y!r}) "
                          f"({tri.v1.x!r},{tri.v1.y!r}) "
                          f"({tri.v2.x!r},{tri.v2.y!r})")
    return 0


def cmd_ingest(args) -> int:
    ds = load_points(args.input)
    save_cache(args.output, ds)
    _note(f"cached {len(ds)} points to {args.output}")
    return 0


def cmd_gen(args) -> int:
    ds = gen_synthetic(args.n, args.kind, args.seed, rect=args.rect,
                       n_clusters=args.clusters, cluster_std=args.spread)
    if args.format == "cache":
        save_cache(args.out, ds)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(serialize_co(ds))
    _note(f"wrote {len(ds)} {args.kind} points to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rknncast",
        description="reverse k-nearest-neighbor queries via ray casting")
    subs = parser.add_subparsers(dest="command", required=True)

    bench = subs.add_parser("bench", help="time algorithms, emit a table")
    _add_instance_args(bench)
    bench.add_argument("--algo", default=",".join(ALGOS),
                       help="comma separated subset of "
                            f"{','.join(ALGOS)}")
    bench.add_argument("--warmup", type=int, default=0,
                       help="discarded runs per algo before timing")
    bench.add_argument("--format", choices=("csv", "json"), default="csv")
    bench.add_argument("--out", default=None, help="write table here "
                       "instead of stdout")
    bench.set_defaults(fn=cmd_bench)

    verify = subs.add_parser("verify",
                             help="check every route against brute force")
    _add_instance_args(verify)
    verify.add_argument("--algo", default=",".join(ALGOS),
                        help="references to include (infzone, slice)")
    verify.set_defaults(fn=cmd_verify)

    stats = subs.add_parser("stats", help="describe one query's scene")
    _add_instance_args(stats)
    stats.add_argument("--q-index", type=int, default=None,
                       help="facility to query (default: first sampled)")
    stats.add_argument("--dump", action="store_true",
                       help="list the chosen strategy's triangles")
    stats.set_defaults(fn=cmd_stats)

    ingest = subs.add_parser("ingest", help="convert points to the binary "
                             "cache format")
    ingest.add_argument("input")
    ingest.add_argument("output")
    ingest.set_defaults(fn=cmd_ingest)

    gen = subs.add_parser("gen", help="generate synthetic points")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--kind", choices=("uniform", "clusters"),
                     default="uniform")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--rect", type=_parse_rect, default=None,
                     metavar="X0,Y0,X1,Y1")
    gen.add_argument("--clusters", type=int, default=10)
    gen.add_argument("--spread", type=float, default=None,
                     help="cluster standard deviation")
    gen.add_argument("--format", choices=("cache", "co"), default="cache")
    gen.add_argument("--out", required=True)
    gen.set_defaults(fn=cmd_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
