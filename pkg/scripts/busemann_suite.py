#!/usr/bin/env python3
"""Slack statistics of the circle and line inequalities on random densities."""
import argparse
import math

import numpy as np

from crossing_lab.busemann import (
    EllipseDensity,
    circle_check,
    constant_circle,
    line_check,
    random_line_density,
    random_trig_density,
    transfer_report,
)


def summarize(label, slacks):
    s = np.asarray(slacks)
    print(f"{label:>8}: n={s.size} min={s.min():.3e} median={np.median(s):.3e} max={s.max():.3e}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--grid", type=int, default=4096)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    summarize("circle", [circle_check(random_trig_density(rng), args.grid).relative_slack for _ in range(args.count)])
    summarize("line", [line_check(random_line_density(rng)).relative_slack for _ in range(args.count)])

    print("equality cases (relative slack):")
    print(f"  f = 1        {circle_check(constant_circle(1.0)).relative_slack:+.2e}")
    for p, q, a in ((1.0, 2.0, 0.0), (0.5, 1.3, 0.7)):
        print(f"  ellipse {p},{q},{a}  {circle_check(EllipseDensity(p, q, a), 8192).relative_slack:+.2e}")
    lq = line_check(transfer_report(constant_circle(1.0)).line)
    print(f"  (1+u^2)^-1.5 {lq.relative_slack:+.2e}  (form {lq.form:.9f}, 2 pi = {2 * math.pi:.9f})")


if __name__ == "__main__":
    main()
