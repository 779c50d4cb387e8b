"""Command-line entry point: ``crossing-lab <command> [flags]``.

Every command writes one report (JSON by default, CSV on request) that
carries the fully resolved configuration next to measured values, targets
and the pass/fail state of each check.  Exit codes: 0 all checks passed,
1 usage or I/O error, 2 a bound or identity was violated beyond tolerance,
3 degenerate geometry invalidated a count or estimate.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import busemann as bu
from . import functionals as fn
from .counting import ENGINES, count_crossings, resolve_workers
from .density import ConstantDensity, DensityError, ThresholdDensity, parse_density, threshold_density_sphere
from .drawing import (
    DrawingError,
    density_stats,
    generate_planar_threshold,
    generate_sphere_threshold,
    jitter_drawing,
    load_drawing,
    save_drawing,
)
from .planar import ConvexPolygon, Disk, DomainError, parse_domain
from .quadrature import QuadratureError
from .sphere import SPHERE, sample_uniform_sphere

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_DEGENERATE = 0, 1, 2, 3
CSV_COLUMNS = ("variable", "value", "target", "gap", "std_error", "samples", "seed")
# the edge-density estimate runs on its own stream so the two estimates are independent
E_STREAM = 0x9E3779B97F4A7C15
DEFAULT_SAMPLES = 10**6


class UsageError(Exception):
    pass


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    limit: float
    rule: str


@dataclass
class Report:
    command: str
    config: dict
    results: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    degenerate: bool = False

    def check(self, name, value, limit, rule):
        ok = value <= limit if rule == "<=" else value >= limit
        self.checks.append(Check(name, bool(ok), float(value), float(limit), rule))
        return ok

    def row(self, variable, value, target=None, gap=None, std_error=0.0, samples=0, seed=None):
        self.rows.append({"variable": variable, "value": value, "target": target, "gap": gap,
                          "std_error": std_error, "samples": samples, "seed": seed})

    @property
    def status(self) -> str:
        if self.degenerate:
            return "degenerate"
        return "ok" if all(c.passed for c in self.checks) else "violation"

    @property
    def exit_code(self) -> int:
        return {"ok": EXIT_OK, "violation": EXIT_VIOLATION, "degenerate": EXIT_DEGENERATE}[self.status]

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "rows": self.rows,
            "checks": [asdict(c) for c in self.checks],
            "status": self.status,
        }


def _plain(obj):
    """Recursively turn numpy scalars/arrays and tuples into JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        # JSON has no inf/nan; keep them readable as strings
        return x if math.isfinite(x) else repr(x)
    return obj


def render(report: Report, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in report.rows:
            writer.writerow({k: ("" if r.get(k) is None else _plain(r.get(k))) for k in CSV_COLUMNS})
        return buf.getvalue()
    return json.dumps(_plain(report.to_dict()), sort_keys=True, indent=2) + "\n"


def emit(report: Report, fmt: str, out: str | None) -> None:
    text = render(report, fmt)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# helpers


def _e_seed(seed: int) -> int:
    return (int(seed) + E_STREAM) % 2**64


def _sphere_density(args):
    return parse_density(args.density, SPHERE)


def _equality_case(w) -> bool:
    """Threshold densities (and w = 1, the threshold at pi) attain the sphere bound."""
    if isinstance(w, ThresholdDensity):
        return True
    return isinstance(w, ConstantDensity) and w.p == 1.0


def sylvester_target(domain, p: float = 1.0):
    """Cr(p) for constant densities where the four-point constant is classical.

    The crossing pairing is one of the three pairings of four points in
    convex position, so Cr = P(convex) / 3, scaled by p^2.  P(convex) is
    affine invariant: 1 - 35/(12 pi^2) for ellipses, 25/36 for
    parallelograms and 2/3 for triangles.
    """
    if isinstance(domain, Disk):
        q = 1.0 - 35.0 / (12.0 * math.pi**2)
    elif isinstance(domain, ConvexPolygon) and len(domain.vertices) == 3:
        q = 2.0 / 3.0
    elif isinstance(domain, ConvexPolygon) and len(domain.vertices) == 4:
        v = domain.vertices
        scale = float(np.max(np.abs(v))) or 1.0
        if np.allclose(v[0] + v[2], v[1] + v[3], atol=1e-12 * scale):
            q = 25.0 / 36.0
        else:
            return None
    else:
        return None
    return p * p * q / 3.0


def _mc_pair(w, args):
    cr = fn.mc_crossing_functional(w, args.samples, args.seed, args.workers)
    e = fn.mc_edge_density(w, args.samples, _e_seed(args.seed), args.workers)
    return cr, e


# ---------------------------------------------------------------------------
# commands


def cmd_verify_sphere(args, rep: Report):
    w = _sphere_density(args)
    cr, e = _mc_pair(w, args)
    e_val = min(max(e.value, 0.0), 1.0)
    bound = fn.theoretical_sphere_bound(e_val)
    cse = fn.combined_se(cr, e, fn.sphere_bound_slope(e_val))
    z = (cr.value - bound) / cse if cse > 0 else 0.0
    rep.results.update({
        "density": w.label(), "crossing": cr.to_dict(), "edge_density": e.to_dict(),
        "bound_at_estimated_density": bound, "combined_se": cse, "z": z, "slack": cr.value - bound,
        "equality_case": _equality_case(w),
    })
    closed_e = w.closed_form_density()
    if closed_e is not None:
        rep.results["closed_form_edge_density"] = closed_e
        rep.results["bound_at_closed_form_density"] = fn.theoretical_sphere_bound(closed_e)
        if _equality_case(w):
            rep.results["z_closed_form"] = cr.z(fn.theoretical_sphere_bound(closed_e))
    rep.row("Cr", cr.value, bound, cr.value - bound, cse, cr.samples, cr.seed)
    rep.row("e", e.value, closed_e, None if closed_e is None else e.value - closed_e, e.std_error,
            e.samples, e.seed)
    rep.check("lower_bound_z", z, -args.tol_sigma, ">=")
    if _equality_case(w):
        rep.check("equality_abs_z", abs(z), args.tol_z, "<=")


def cmd_verify_planar(args, rep: Report):
    domain = parse_domain(args.domain)
    w = parse_density(args.density, domain)
    cr, e = _mc_pair(w, args)
    e_val = max(e.value, 0.0)
    bound = fn.theoretical_planar_bound(e_val)
    cse = fn.combined_se(cr, e, fn.planar_bound_slope(e_val))
    z = (cr.value - bound) / cse if cse > 0 else 0.0
    rep.results.update({
        "domain": domain.spec(), "area": domain.area, "density": w.label(), "crossing": cr.to_dict(),
        "edge_density": e.to_dict(), "bound": bound, "combined_se": cse, "z": z,
        "ratio_to_bound": cr.value / bound if bound > 0 else None,
        "planar_constant": fn.PLANAR_CONSTANT,
    })
    rep.row("Cr", cr.value, bound, cr.value - bound, cse, cr.samples, cr.seed)
    rep.row("e", e.value, None, None, e.std_error, e.samples, e.seed)
    rep.check("lower_bound_z", z, -args.tol_sigma, ">=")
    if isinstance(w, ConstantDensity):
        target = sylvester_target(domain, w.p)
        if target is not None:
            zt = cr.z(target)
            rep.results["four_point_target"] = target
            rep.results["z_four_point"] = zt
            rep.row("Cr_four_point", cr.value, target, cr.value - target, cr.std_error, cr.samples, cr.seed)
            rep.check("four_point_abs_z", abs(zt), args.tol_z, "<=")


def cmd_verify_identities(args, rep: Report):
    w = _sphere_density(args)
    flux = fn.flux_crossing_representation(w, args.x_samples, args.theta_grid, args.tol_quad)
    inc = fn.incidence_identity_check(w, args.x_samples, args.theta_grid, args.tol_quad)
    if inc["lhs"] is None:
        est = fn.mc_edge_density(w, args.samples, _e_seed(args.seed), args.workers)
        inc["lhs"] = est.value
        inc["gap"] = abs(inc["rhs"] - est.value)
    cr = fn.mc_crossing_functional(w, args.samples, args.seed, args.workers)
    rel = abs(flux.value - cr.value) / cr.value if cr.value > 0 else abs(flux.value)
    allowed = max(args.tol_rel, args.tol_sigma * cr.std_error / cr.value if cr.value > 0 else 0.0)
    rep.results.update({
        "density": w.label(), "flux_representation": asdict(flux), "mc_crossing": cr.to_dict(),
        "relative_gap": rel, "relative_allowance": allowed, "incidence": inc,
    })
    rep.row("Cr_flux", flux.value, cr.value, flux.value - cr.value, cr.std_error, cr.samples, cr.seed)
    rep.row("e_incidence", inc["rhs"], inc["lhs"], inc["rhs"] - inc["lhs"], 0.0, inc["nodes"], None)
    rep.check("flux_relative_gap", rel, allowed, "<=")
    rep.check("incidence_gap", inc["gap"], args.tol_incidence, "<=")


def cmd_verify_busemann(args, rep: Report):
    f = bu.parse_circle_density(args.density)
    circ = bu.circle_check(f, args.grid)
    # the line picture needs a pi-periodic density; periodizing keeps the form
    periodic = bu.is_pi_periodic(f, 1e-9)
    fp = f if periodic else bu.pi_periodize(f)
    tr = bu.transfer_report(fp, L=args.tail_length, circle_grid=args.grid)
    line = bu.line_check(tr.line)
    transfer = {k: v for k, v in asdict(tr).items() if k != "line"}
    transfer.update(form_gap=tr.form_gap, integral_gap=tr.integral_gap, periodized=not periodic)
    rep.results.update({"density": args.density, "circle": asdict(circ), "line": asdict(line),
                        "transfer": transfer})
    rep.row("circle_form", circ.form, circ.bound, circ.slack, circ.quad_error, args.grid, None)
    rep.row("line_form", line.form, line.bound, line.slack, line.quad_error, tr.line.nodes.size, None)
    tol = args.tol_slack * max(1.0, abs(circ.bound))
    rep.check("circle_slack", circ.slack, -tol, ">=")
    rep.check("line_slack", line.slack, -args.tol_slack * max(1.0, abs(line.bound)), ">=")
    if isinstance(f, bu.EllipseDensity) or (isinstance(f, bu.TrigDensity) and f.is_constant):
        # equality witnesses: both sides agree
        rep.check("circle_relative_slack", abs(circ.relative_slack), args.tol_equality, "<=")
        rep.check("line_relative_slack", abs(line.relative_slack), args.tol_equality, "<=")


def cmd_verify_bathtub(args, rep: Report):
    conv = fn.convexity_check(args.grid)
    rep.results["convexity"] = asdict(conv)
    rep.check("second_difference", conv.worst_second_difference, -args.tol_convexity, ">=")
    rep.check("tau_inequality", conv.worst_tau_gap, -args.tol_convexity, ">=")
    rep.row("second_difference", conv.worst_second_difference, 0.0, conv.worst_second_difference,
            0.0, args.grid, None)

    # left fill against the closed profile, and random feasible measures against left fill
    masses = np.linspace(0.0, 2.0, 21)
    fill = np.array([fn.bathtub_left_fill_oracle(M, args.fill_grid) for M in masses])
    exact = np.array([fn.bathtub_phi(M * fn.FLUX_NORM) / fn.FLUX_NORM for M in masses])
    fill_err = float(np.max(np.abs(fill - exact)))
    rng = np.random.Generator(np.random.Philox(key=[int(args.seed) % 2**64, 1]))
    rand = fn.random_feasible_costs(1.0, args.fill_grid, args.random_measures, rng)
    rand_gap = float(rand.min() - fn.bathtub_left_fill_oracle(1.0, args.fill_grid))
    rep.results["left_fill"] = {"max_abs_error": fill_err, "grid": args.fill_grid,
                                "random_measures": args.random_measures, "min_random_excess": rand_gap}
    rep.check("left_fill_vs_profile", fill_err, 10.0 / args.fill_grid**2, "<=")
    rep.check("random_feasible_excess", rand_gap, -args.tol_bathtub, ">=")

    pointwise = {}
    for spec in args.density:
        w = parse_density(spec, SPHERE)
        rng = np.random.Generator(np.random.Philox(key=[int(args.seed) % 2**64, 2]))
        X = sample_uniform_sphere(rng, args.points)
        th = rng.uniform(0.0, 2.0 * math.pi, args.points)
        slack = fn.bathtub_slack_batch(w, X, th, args.tol_quad)
        worst = float(slack.min())
        pointwise[spec] = {"min_slack": worst, "points": args.points}
        rep.row(f"bathtub:{spec}", worst, 0.0, worst, 0.0, args.points, args.seed)
        rep.check(f"bathtub:{spec}", worst, -args.tol_bathtub, ">=")
    rep.results["pointwise"] = pointwise


def _ambient(text: str):
    return SPHERE if text == "sphere" else parse_domain(text)


def cmd_drawing_generate(args, rep: Report):
    amb = _ambient(args.ambient)
    if amb is SPHERE:
        if args.t is None:
            raise UsageError("--t is required on the sphere")
        D = generate_sphere_threshold(args.n, args.t, args.sampler, args.seed)
    else:
        if args.r is None:
            raise UsageError("--r is required in a planar domain")
        sampler = "random" if args.sampler == "fibonacci" else args.sampler
        D = generate_planar_threshold(args.n, args.r, amb, args.seed, sampler)
    if args.drawing:
        save_drawing(D, args.drawing)
    stats = density_stats(D)
    rep.results.update({"drawing": args.drawing, "meta": D.meta, **stats})
    rep.row("m", D.m, None, None, 0.0, 0, args.seed)


def _count_target(D):
    """cr / n^4 predicted by the sphere bound, at the generator's t when known."""
    if not D.sphere:
        return None, None
    t = D.meta.get("t")
    e = fn.threshold_edge_density(t) if t is not None else density_stats(D)["ordered_density"]
    return fn.theoretical_sphere_bound(min(e, 1.0)) / 8.0, e


def cmd_drawing_count(args, rep: Report):
    D = load_drawing(args.drawing, strict=not args.lenient)
    engines = list(ENGINES) if args.engine == "both" else [args.engine]
    reports = {name: count_crossings(D, name, args.workers) for name in engines}
    first = reports[engines[0]]
    rep.results["counts"] = {name: r.to_dict() for name, r in reports.items()}
    if len(reports) > 1:
        same = len({r.crossings for r in reports.values()}) == 1
        rep.check("engines_agree", 0.0 if same else 1.0, 0.0, "<=")
    if not first.valid and args.jitter is not None:
        J = jitter_drawing(D, args.jitter, args.seed)
        jr = count_crossings(J, engines[0], args.workers)
        rep.results["jitter"] = {"eps": args.jitter, "seed": args.seed, "count": jr.to_dict()}
        first = jr
    if not first.valid:
        rep.degenerate = True
    n = D.n
    ratio = first.crossings / float(n) ** 4 if n else 0.0
    target, e_used = _count_target(D)
    rep.results.update({"n": n, "m": D.m, "crossings": first.crossings, "cr_over_n4": ratio,
                        "target_cr_over_n4": target, "target_edge_density": e_used})
    gap = None if target is None else ratio - target
    rep.row("cr_over_n4", ratio, target, gap, 0.0, first.pairs_tested, args.seed)
    if target is not None:
        rep.results["relative_gap"] = gap / target if target > 0 else None
        if args.tol_rel is not None and target > 0:
            rep.check("relative_gap", abs(gap / target), args.tol_rel, "<=")


def cmd_drawing_stats(args, rep: Report):
    D = load_drawing(args.drawing, strict=not args.lenient)
    stats = density_stats(D)
    rep.results.update({"ambient": "sphere" if D.sphere else D.ambient.spec(), "meta": D.meta, **stats})
    rep.row("ordered_density", stats["ordered_density"], None, None, 0.0, 0, None)


def _sweep_points(args):
    if args.values:
        return [float(v) for v in args.values.split(",")]
    if args.steps < 1:
        raise UsageError("--steps must be positive")
    if args.steps == 1:
        return [args.start]
    return list(np.linspace(args.start, args.stop, args.steps))


def cmd_sweep(args, rep: Report):
    pts = _sweep_points(args)
    if args.variable == "t":
        for t in pts:
            if args.measure == "mc":
                w = threshold_density_sphere(t)
                cr = fn.mc_crossing_functional(w, args.samples, args.seed, args.workers)
                target = fn.theoretical_sphere_bound(fn.threshold_edge_density(t))
                rep.row(t, cr.value, target, cr.value - target, cr.std_error, cr.samples, cr.seed)
            else:
                val = fn.midrange_limit_ratio(t)
                rep.row(t, val, fn.PLANAR_CONSTANT, val - fn.PLANAR_CONSTANT, 0.0, 0, None)
    elif args.variable == "r":
        domain = parse_domain(args.domain)
        for r in pts:
            w = parse_density(f"threshold:{r!r}", domain)
            cr, e = _mc_pair(w, args)
            bound = fn.theoretical_planar_bound(max(e.value, 0.0))
            cse = fn.combined_se(cr, e, fn.planar_bound_slope(max(e.value, 0.0)))
            rep.row(r, cr.value, bound, cr.value - bound, cse, cr.samples, cr.seed)
            rep.check(f"planar_bound:r={r!r}", (cr.value - bound) / cse if cse else 0.0, -args.tol_sigma, ">=")
    elif args.variable == "n":
        target = fn.theoretical_sphere_bound(fn.threshold_edge_density(args.t)) / 8.0
        for n in pts:
            D = generate_sphere_threshold(int(round(n)), args.t, args.sampler, args.seed)
            cr = count_crossings(D, args.engine, args.workers)
            if not cr.valid:
                rep.degenerate = True
            ratio = cr.crossings / float(D.n) ** 4
            rep.row(D.n, ratio, target, ratio - target, 0.0, cr.pairs_tested, args.seed)
    elif args.variable == "delta":
        D = generate_sphere_threshold(args.n, args.t, args.sampler, args.seed)
        cr = count_crossings(D, args.engine, args.workers)
        if not cr.valid:
            rep.degenerate = True
        else:
            for d in pts:
                out = fn.smoothing_consistency(D, d, args.samples, args.seed, args.workers, cr.crossings)
                rep.row(d, out["lhs"], out["rhs"], out["gap"], out["std_error"], out["samples"], args.seed)
                rep.check(f"smoothed_lower:delta={d!r}", out["gap"], -args.tol_sigma * out["std_error"], ">=")
    rep.results["variable"] = args.variable
    rep.results["points"] = len(rep.rows)


# ---------------------------------------------------------------------------
# argument parsing


class Parser(argparse.ArgumentParser):
    """argparse with exit status 1 for usage errors (argparse's default is 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _workers(text):
    if text == "auto":
        return "auto"
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("workers must be a positive integer or 'auto'") from None
    if v < 1:
        raise argparse.ArgumentTypeError("workers must be a positive integer or 'auto'")
    return v


def _samples(text):
    v = int(float(text))
    if v < 1:
        raise argparse.ArgumentTypeError("samples must be positive")
    return v


def _common(samples=True):
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="64-bit seed (default 0)")
    if samples:
        p.add_argument("--samples", type=_samples, default=DEFAULT_SAMPLES,
                       help="Monte-Carlo sample count, e.g. 1e7 (default 1e6)")
    p.add_argument("--workers", type=_workers, default=None,
                   help="thread count or 'auto' (default: $CROSSING_LAB_WORKERS, else CPU count)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = Parser(prog="crossing-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)
    mc = _common()
    nomc = _common(samples=False)

    p = sub.add_parser("verify-sphere", parents=[mc], help="Cr(w) against the sharp sphere bound")
    p.add_argument("--t", type=float, default=None, help="threshold distance (shorthand for threshold:t)")
    p.add_argument("--density", default=None,
                   help="threshold:t | band:t1,t2 | const:p | smoothed:<file>,delta (default threshold:pi/2)")
    p.add_argument("--tol-z", type=float, default=4.0, help="|z| allowed in equality cases")
    p.add_argument("--tol-sigma", type=float, default=3.0, help="combined SEs allowed below the bound")
    p.set_defaults(func=cmd_verify_sphere)

    p = sub.add_parser("verify-planar", parents=[mc], help="Cr(w) in a convex domain against (8/(9 pi^2)) e^3")
    p.add_argument("--domain", default="disk:0,0,1", help="disk:cx,cy,r | poly:x1,y1;x2,y2;...")
    p.add_argument("--density", default="const:1", help="threshold:r | const:p")
    p.add_argument("--tol-z", type=float, default=4.0)
    p.add_argument("--tol-sigma", type=float, default=3.0)
    p.set_defaults(func=cmd_verify_planar)

    p = sub.add_parser("verify-identities", parents=[mc], help="flux representation and incidence identity")
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--density", default=None, help="as for verify-sphere")
    p.add_argument("--x-samples", type=int, default=64, help="Fibonacci nodes for the outer integral")
    p.add_argument("--theta-grid", type=int, default=64)
    p.add_argument("--tol-quad", type=float, default=1e-7)
    p.add_argument("--tol-rel", type=float, default=0.01)
    p.add_argument("--tol-sigma", type=float, default=3.0)
    p.add_argument("--tol-incidence", type=float, default=1e-3)
    p.set_defaults(func=cmd_verify_identities)

    p = sub.add_parser("verify-busemann", parents=[nomc], help="circle and line Busemann inequalities")
    p.add_argument("--density", default="const:1", help="const:c | trig:a0,a1,b1,... | ellipse:p,q | grid:<file>")
    p.add_argument("--grid", type=int, default=4096)
    p.add_argument("--tail-length", type=float, default=1e3)
    p.add_argument("--tol-slack", type=float, default=1e-9)
    p.add_argument("--tol-equality", type=float, default=1e-6)
    p.set_defaults(func=cmd_verify_busemann)

    p = sub.add_parser("verify-bathtub", parents=[nomc], help="bathtub profile, left fill and convexity")
    p.add_argument("--grid", type=int, default=10_000, help="alpha/tau grid for convexity")
    p.add_argument("--fill-grid", type=int, default=1000)
    p.add_argument("--random-measures", type=int, default=1000)
    p.add_argument("--points", type=int, default=1000, help="random (x, theta) per density")
    p.add_argument("--density", action="append", default=None,
                   help="sphere density to test pointwise (repeatable)")
    p.add_argument("--tol-quad", type=float, default=1e-8)
    p.add_argument("--tol-bathtub", type=float, default=1e-6)
    p.add_argument("--tol-convexity", type=float, default=1e-9)
    p.set_defaults(func=cmd_verify_bathtub)

    p = sub.add_parser("drawing", help="generate, count or describe drawings")
    dsub = p.add_subparsers(dest="action", required=True, parser_class=Parser)
    g = dsub.add_parser("generate", parents=[nomc], help="threshold drawing to a JSON file")
    g.add_argument("drawing", nargs="?", default=None, help="output drawing file")
    g.add_argument("--ambient", default="sphere", help="sphere | disk:cx,cy,r | poly:...")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--t", type=float, default=None, help="sphere threshold distance")
    g.add_argument("--r", type=float, default=None, help="planar threshold distance")
    g.add_argument("--sampler", choices=("fibonacci", "random", "grid"), default="fibonacci")
    g.set_defaults(func=cmd_drawing_generate)
    c = dsub.add_parser("count", parents=[nomc], help="exact crossing count")
    c.add_argument("drawing")
    c.add_argument("--engine", choices=tuple(ENGINES) + ("both",), default="grid")
    c.add_argument("--jitter", type=float, nargs="?", const=1e-9, default=None,
                   help="re-count a jittered copy if degenerate pairs are found (default eps 1e-9)")
    c.add_argument("--tol-rel", type=float, default=None, help="assert |cr/n^4 / target - 1| <= tol")
    c.add_argument("--lenient", action="store_true", help="normalise edge order instead of rejecting")
    c.set_defaults(func=cmd_drawing_count)
    s = dsub.add_parser("stats", parents=[nomc], help="vertex/edge counts and edge density")
    s.add_argument("drawing")
    s.add_argument("--lenient", action="store_true")
    s.set_defaults(func=cmd_drawing_stats)

    p = sub.add_parser("sweep", parents=[mc], help="one-parameter sweep, one row per point")
    p.add_argument("variable", choices=("t", "r", "n", "delta"))
    p.add_argument("--start", type=float, default=0.05)
    p.add_argument("--stop", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--values", default=None, help="explicit comma-separated points (overrides the range)")
    p.add_argument("--measure", choices=("closed", "mc"), default="closed", help="t sweep: closed forms or MC")
    p.add_argument("--domain", default="poly:0,0;1,0;1,1;0,1", help="r sweep domain")
    p.add_argument("--t", type=float, default=math.pi / 3, help="threshold for n and delta sweeps")
    p.add_argument("--n", type=int, default=300, help="drawing size for the delta sweep")
    p.add_argument("--sampler", choices=("fibonacci", "random"), default="fibonacci")
    p.add_argument("--engine", choices=tuple(ENGINES), default="grid")
    p.add_argument("--tol-sigma", type=float, default=3.0)
    p.set_defaults(func=cmd_sweep)
    return parser


def resolved_config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    cfg["workers"] = resolve_workers(cfg.get("workers"))
    if cfg.get("command") == "verify-bathtub" and cfg.get("density") is None:
        cfg["density"] = list(BATHTUB_DEFAULTS)
    if cfg.get("command") in ("verify-sphere", "verify-identities"):
        if cfg.get("t") is not None and cfg.get("density") is not None:
            raise UsageError("give either --t or --density, not both")
        if cfg.get("t") is not None:
            cfg["density"] = f"threshold:{cfg['t']!r}"
        elif cfg.get("density") is None:
            cfg["density"] = f"threshold:{math.pi / 2!r}"
    return cfg


BATHTUB_DEFAULTS = ("threshold:1.0471975511965976", "threshold:1.5707963267948966",
                    "band:1.0471975511965976,2.0943951023931957", "const:1")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolved_config(args)
    except UsageError as exc:
        print(f"crossing-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args.workers = cfg["workers"]
    if "density" in cfg:
        args.density = cfg["density"]
    command = args.command + (f" {args.action}" if getattr(args, "action", None) else "")
    rep = Report(command, cfg)
    t0 = time.perf_counter()
    try:
        args.func(args, rep)
    except fn.DegenerateSampleError as exc:
        rep.degenerate = True
        rep.results["error"] = str(exc)
    except (UsageError, DensityError, DomainError, DrawingError, bu.BusemannError, OSError, ValueError) as exc:
        print(f"crossing-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QuadratureError as exc:
        print(f"crossing-lab: quadrature failed: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    rep.results["wall_time_ms"] = 1e3 * (time.perf_counter() - t0)
    try:
        emit(rep, args.format, args.out)
    except OSError as exc:
        print(f"crossing-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
