"""How many occluders survive pruning as the facility set grows.

Reruns the flat-growth experiment: on clustered data the exact zone
accepts a few dozen facilities no matter how many exist, while the
no-pruning strategy accepts all of them. Prints one table row per
facility count.

    python3 scripts/occluder_growth.py --sizes 100,1000,10000
"""
import argparse
import time

import numpy as np

from rknncast import (
    CONSERVATIVE,
    EXACT,
    NO_PRUNING,
    SplitSpec,
    domain_rect,
    gen_synthetic,
    select_facilities,
    split_facilities,
)

STRATEGIES = [("exact", EXACT), ("conservative", CONSERVATIVE),
              ("none", NO_PRUNING)]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=260_000)
    ap.add_argument("--kind", choices=("uniform", "clusters"),
                    default="clusters")
    ap.add_argument("--sizes", default="100,1000,10000",
                    help="comma-separated facility counts")
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--queries", type=int, default=50)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    ds = gen_synthetic(args.points, args.kind, args.seed)
    print(f"dataset {ds.name}, k={args.k}, {args.queries} queries per size")
    header = f"{'|F|':>8}"
    for label, _ in STRATEGIES:
        header += f"  {label + ' mean':>18} {'max':>6} {'ms':>8}"
    print(header)
    for n_fac in sizes:
        F, U = split_facilities(ds, SplitSpec(n_fac, 1))
        rect = domain_rect(F, U)
        rng = np.random.default_rng(2)
        qs = rng.choice(n_fac, size=min(args.queries, n_fac), replace=False)
        row = f"{n_fac:>8}"
        for _, strategy in STRATEGIES:
            t0 = time.perf_counter()
            counts = [len(select_facilities(F, int(q), args.k, rect,
                                            strategy).occluders)
                      for q in qs]
            ms = (time.perf_counter() - t0) * 1e3 / len(qs)
            row += f"  {np.mean(counts):>18.1f} {max(counts):>6} {ms:>8.2f}"
        print(row)


if __name__ == "__main__":
    main()
