#!/usr/bin/env python3
"""Crossing counts of threshold drawings against the limiting constant.

For each n the drawing on n points with threshold t is counted and
cr / n^4 is compared with B(e) / 8, where e is the limiting edge density.
"""
import argparse
import csv
import math
import sys

from crossing_lab.counting import count_crossings
from crossing_lab.drawing import generate_sphere_threshold
from crossing_lab.functionals import theoretical_sphere_bound, threshold_edge_density


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", type=float, default=math.pi / 3)
    ap.add_argument("--n", type=int, nargs="+", default=[200, 300, 400, 500, 700, 1000])
    ap.add_argument("--sampler", choices=["fibonacci", "random"], default="fibonacci")
    ap.add_argument("--seeds", type=int, default=1, help="random-sampler repetitions per n")
    ap.add_argument("--workers", default="auto")
    args = ap.parse_args(argv)

    e = threshold_edge_density(args.t)
    target = theoretical_sphere_bound(e) / 8.0
    w = csv.writer(sys.stdout)
    w.writerow(["n", "seed", "m", "edge_density", "crossings", "cr_over_n4", "target", "rel_dev"])
    seeds = range(args.seeds) if args.sampler == "random" else [0]
    for n in args.n:
        for seed in seeds:
            D = generate_sphere_threshold(n, args.t, args.sampler, seed)
            rep = count_crossings(D, "grid", args.workers)
            r = rep.crossings / float(n) ** 4
            w.writerow([n, seed, D.m, f"{2 * D.m / n**2:.6f}", rep.crossings, f"{r:.8g}", f"{target:.8g}",
                        f"{r / target - 1:+.5f}"])
            sys.stdout.flush()


if __name__ == "__main__":
    main()
