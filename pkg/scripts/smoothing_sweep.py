#!/usr/bin/env python3
"""Gap between the smoothed crossing functional and 8 cr / n^4 as delta shrinks."""
import argparse
import json
import math

from crossing_lab.counting import count_crossings
from crossing_lab.drawing import generate_sphere_threshold
from crossing_lab.functionals import smoothing_consistency


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--t", type=float, default=math.pi / 3)
    ap.add_argument("--delta", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    ap.add_argument("--samples", type=float, default=1e6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", default="auto")
    args = ap.parse_args(argv)

    D = generate_sphere_threshold(args.n, args.t)
    rep = count_crossings(D, "grid", args.workers)
    for d in args.delta:
        out = smoothing_consistency(D, d, int(args.samples), args.seed, args.workers, crossings=rep.crossings)
        print(json.dumps({k: out[k] for k in ("delta", "lhs", "rhs", "gap", "std_error", "gap_over_sqrt_delta")}))


if __name__ == "__main__":
    main()
