"""Cast-time scaling: facility count at fixed k, then k at fixed |F|.

The first sweep should come out flat (pruning holds the scene size
steady); the second grows roughly with the number of accepted
occluders, since a software tracer pays for every occluder a ray
pierces once early termination stops helping.

    python3 scripts/cast_scaling.py --users 1000000
"""
import argparse

import numpy as np

from rknncast import QueryConfig, domain_rect, rknn_query


def sweep(F: np.ndarray, U: np.ndarray, k: int, queries, rect) -> tuple:
    cast, occ = [], []
    for qi in queries:
        res = rknn_query(F, U, int(qi), QueryConfig(k=k), rect=rect)
        cast.append(res.t_cast_ms)
        occ.append(res.occluders_accepted)
    return float(np.mean(cast)), float(np.mean(occ))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--users", type=int, default=1_000_000)
    ap.add_argument("--sizes", default="100,1000,10000",
                    help="facility counts for the |F| sweep")
    ap.add_argument("--k", type=int, default=10, help="k for the |F| sweep")
    ap.add_argument("--fixed-facilities", type=int, default=100)
    ap.add_argument("--ks", default="1,5,10,25,50,100",
                    help="k values for the k sweep")
    ap.add_argument("--queries", type=int, default=5)
    ap.add_argument("--seed", type=int, default=23)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    hi = 10_000.0
    U = rng.uniform(0.0, hi, size=(args.users, 2))

    # warm the jit kernels off the clock
    rknn_query(rng.uniform(0.0, hi, size=(20, 2)), U[:100], 0, QueryConfig(k=2))

    print(f"|U|={args.users}, {args.queries} queries per point\n")
    print(f"facility sweep at k={args.k}")
    print(f"{'|F|':>8} {'occluders':>10} {'cast ms':>9}")
    for n_fac in (int(s) for s in args.sizes.split(",")):
        F = rng.uniform(0.0, hi, size=(n_fac, 2))
        queries = np.random.default_rng(args.seed + 1).choice(
            n_fac, size=min(args.queries, n_fac), replace=False)
        ms, occ = sweep(F, U, args.k, queries, domain_rect(F, U))
        print(f"{n_fac:>8} {occ:>10.1f} {ms:>9.1f}")

    n_fac = args.fixed_facilities
    F = rng.uniform(0.0, hi, size=(n_fac, 2))
    rect = domain_rect(F, U)
    queries = np.random.default_rng(args.seed + 2).choice(
        n_fac, size=min(args.queries, n_fac), replace=False)
    print(f"\nk sweep at |F|={n_fac}")
    print(f"{'k':>8} {'occluders':>10} {'cast ms':>9}")
    for k in (int(s) for s in args.ks.split(",")):
        ms, occ = sweep(F, U, k, queries, rect)
        print(f"{k:>8} {occ:>10.1f} {ms:>9.1f}")


if __name__ == "__main__":
    main()
