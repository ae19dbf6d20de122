#!/usr/bin/env python3
"""Empirical embedding constants between unweighted modulation spaces.

For each pair ``(p1, q1) -> (p2, q2)`` prints the largest ratio
``||f||_{M^{p2,q2}} / ||f||_{M^{p1,q1}}`` over a seeded ensemble at several
grid sizes, as CSV on standard output.
"""

import argparse
import csv
import sys

from modcalc.harness import Ensemble
from modcalc.lattice import UniformGrid
from modcalc.norms import ModSpaceSpec, embedding_check

PAIRS = [((1, 1), (2, 2)), ((1, 2), (2, 2)), ((2, 1), (2, 2)), ((2, 2), ("inf", "inf")), ((1, 1), ("inf", "inf"))]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--kind", default="gaussian_chirps")
    ap.add_argument("--sizes", type=int, nargs="+", default=[128, 192, 256])
    args = ap.parse_args(argv)
    ens = Ensemble(args.kind, count=args.count, seed=args.seed)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["p1", "q1", "p2", "q2", "N", "max_ratio", "min_ratio"])
    for (p1, q1), (p2, q2) in PAIRS:
        s1, s2 = ModSpaceSpec.lpq(p1, q1), ModSpaceSpec.lpq(p2, q2)
        for n in args.sizes:
            rep = embedding_check(ens.members(UniformGrid.box(12.0, n)), s1, s2)
            out.writerow([p1, q1, p2, q2, n, repr(rep.max_ratio), repr(rep.min_ratio)])
    return 0


if __name__ == "__main__":
    sys.exit(main())
