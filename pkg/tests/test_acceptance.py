"""Acceptance criteria, one or more tests each, marked with their number.

The terminal summary prints one PASS/FAIL line per criterion.  Monte-Carlo
runs use 10^7 samples and fixed seeds; the estimates are shared between
criteria through module fixtures.
"""

import json
import math

import numpy as np
import pytest

from crossing_lab.busemann import (
    EllipseDensity,
    LineDensity,
    circle_bound,
    circle_check,
    circle_form,
    constant_circle,
    line_check,
    random_line_density,
    random_trig_density,
    transfer_report,
)
from crossing_lab.cli import main as cli_main
from crossing_lab.counting import count_crossings, count_crossings_brute, count_crossings_grid
from crossing_lab.density import (
    band_density_sphere,
    constant_density,
    rescale_near_uniform,
    smoothed_from_drawing,
    threshold_density_planar,
    threshold_density_sphere,
)
from crossing_lab.drawing import Drawing, generate_planar_threshold, generate_sphere_threshold
from crossing_lab.functionals import (
    PLANAR_CONSTANT,
    bathtub_slack_batch,
    combined_se,
    convexity_check,
    flux_crossing_representation,
    incidence_identity_check,
    mc_crossing_functional,
    mc_edge_density,
    midrange_limit_ratio,
    planar_bound_slope,
    smoothing_consistency,
    sphere_bound_slope,
    theoretical_planar_bound,
    theoretical_sphere_bound,
    threshold_edge_density,
)
from crossing_lab.planar import AffineMap, Disk, affine_map, unit_square
from crossing_lab.sphere import random_rotation, sample_uniform_sphere

N = 10**7
CR_SEED, E_SEED = 20_231, 70_517
THRESHOLDS = {"pi/3": math.pi / 3, "pi/2": math.pi / 2, "2pi/3": 2 * math.pi / 3}
DISK_TARGET = (1.0 - 35.0 / (12.0 * math.pi**2)) / 3.0
SQUARE_TARGET = 25.0 / 108.0


def _closed(t):
    return (math.sin(t) - t * math.cos(t)) ** 2 / (8 * math.pi**2)


@pytest.fixture(scope="module")
def sphere_mc():
    """(Cr, e) estimates at 10^7 samples for the sphere densities used below."""
    cache = {}

    def get(name, w):
        if name not in cache:
            cache[name] = (mc_crossing_functional(w, N, CR_SEED, "auto"), mc_edge_density(w, N, E_SEED, "auto"))
        return cache[name]

    return get


# -- 1 ----------------------------------------------------------------------


@pytest.mark.acceptance(1)
@pytest.mark.parametrize("name", list(THRESHOLDS))
def test_sphere_equality_case(name, sphere_mc, detail):
    t = THRESHOLDS[name]
    cr, e = sphere_mc(name, threshold_density_sphere(t))
    bound = theoretical_sphere_bound(min(max(e.value, 0.0), 1.0))
    cse = combined_se(cr, e, sphere_bound_slope(e.value))
    z = (cr.value - bound) / cse
    detail(f"t={name}: Cr={cr.value:.6g} bound(e_hat)={bound:.6g} z={z:+.2f}")
    assert cr.degenerate == 0
    assert abs(z) <= 3.0
    # the documented targets
    assert _closed(math.pi / 3) == pytest.approx(1.48506e-3, abs=5e-9)
    assert _closed(math.pi / 2) == pytest.approx(1.26651e-2, abs=5e-8)


# -- 2 ----------------------------------------------------------------------


@pytest.mark.acceptance(2)
def test_full_density_crossing_probability(sphere_mc, detail):
    cr, e = sphere_mc("const", constant_density(1.0))
    z = cr.z(0.125)
    detail(f"Cr(w=1)={cr.value:.6f} se={cr.std_error:.2g} z={z:+.2f}")
    assert e.value == 1.0
    assert abs(z) <= 3.0


# -- 3 ----------------------------------------------------------------------


@pytest.mark.acceptance(3)
def test_band_strictness_witness(sphere_mc, detail):
    cr, e = sphere_mc("band", band_density_sphere(math.pi / 3, 2 * math.pi / 3))
    bound = theoretical_sphere_bound(min(max(e.value, 0.0), 1.0))
    cse = combined_se(cr, e, sphere_bound_slope(e.value))
    margin = (cr.value - bound) / cse
    detail(f"band Cr={cr.value:.6g} bound={bound:.6g} margin={margin:.1f} SE")
    assert theoretical_sphere_bound(0.5) == pytest.approx(0.0126651, abs=5e-8)
    assert margin > 10.0


# -- 4 ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def fib500():
    D = generate_sphere_threshold(500, math.pi / 3)
    return D, count_crossings(D, "grid", "auto"), count_crossings(D, "brute", "auto")


@pytest.mark.acceptance(4)
def test_fibonacci_engines_agree(fib500, detail):
    _, g, b = fib500
    detail(f"grid={g.crossings} brute={b.crossings}")
    assert g.valid and b.valid
    assert g.crossings == b.crossings


@pytest.mark.acceptance(4)
def test_fibonacci_count_within_five_percent(fib500, detail):
    D, g, _ = fib500
    target = 1.85634e-4
    assert theoretical_sphere_bound(0.25) / 8 == pytest.approx(target, rel=1e-5)
    ratio = g.crossings / 500**4
    rel = ratio / target - 1.0
    detail(f"cr/n^4={ratio:.6g} vs {target:.6g} ({100 * rel:+.2f}%)")
    assert abs(rel) <= 0.05


# -- 5 ----------------------------------------------------------------------


@pytest.mark.acceptance(5)
@pytest.mark.parametrize("name", ["pi/3", "pi/2"])
def test_flux_representation_and_edge_identity(name, sphere_mc, detail):
    t = THRESHOLDS[name]
    w = threshold_density_sphere(t)
    cr, _ = sphere_mc(name, w)
    flux = flux_crossing_representation(w, x_samples=64, theta_grid=64)
    inc = incidence_identity_check(w, x_samples=64, theta_grid=64)
    rel = flux.value / cr.value - 1.0
    detail(f"t={name}: flux Cr={flux.value:.6g} MC={cr.value:.6g} ({100 * rel:+.2f}%, "
           f"{(flux.value - cr.value) / cr.std_error:+.2f} SE) incidence gap={inc['gap']:.1e}")
    # 1 % or 3 SE of the Monte-Carlo value, whichever is larger
    assert abs(flux.value - cr.value) <= max(0.01 * cr.value, 3 * cr.std_error)
    assert inc["gap"] < 1e-3


# -- 6 ----------------------------------------------------------------------


def _bathtub_densities():
    sp = smoothed_from_drawing(generate_sphere_threshold(300, math.pi / 3), 0.1, grid=20_000)
    return {
        "threshold:pi/3": threshold_density_sphere(math.pi / 3),
        "threshold:pi/2": threshold_density_sphere(math.pi / 2),
        "band:pi/3,2pi/3": band_density_sphere(math.pi / 3, 2 * math.pi / 3),
        "const:1": constant_density(1.0),
        "const:0.4": constant_density(0.4),
        # the smoothed density is admissible (values <= 1) only after rescaling
        "smoothed/(1+eta)^2": rescale_near_uniform(sp),
    }


@pytest.mark.acceptance(6)
def test_bathtub_pointwise(detail):
    rng = np.random.Generator(np.random.Philox(key=[6, 0]))
    worst = {}
    for name, w in _bathtub_densities().items():
        X = sample_uniform_sphere(rng, 1000)
        theta = rng.uniform(0.0, 2 * math.pi, 1000)
        worst[name] = float(bathtub_slack_batch(w, X, theta).min())
    detail("min g - phi(a): " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()))
    assert all(v >= -1e-6 for v in worst.values())


@pytest.mark.acceptance(6)
def test_profile_convexity(detail):
    rep = convexity_check(10_000)
    detail(f"min second difference={rep.worst_second_difference:.1e}, min tau gap={rep.worst_tau_gap:.1e}")
    assert rep.worst_second_difference >= -1e-9
    assert rep.worst_tau_gap >= 0.0


# -- 7 ----------------------------------------------------------------------


@pytest.mark.acceptance(7)
def test_busemann_random_densities(detail):
    rng = np.random.Generator(np.random.Philox(key=[7, 0]))
    worst_c = min(circle_check(random_trig_density(rng)).relative_slack for _ in range(1000))
    worst_l = min(line_check(random_line_density(rng)).relative_slack for _ in range(1000))
    detail(f"min relative slack: circle={worst_c:.2e}, line={worst_l:.2e}")
    assert worst_c >= -1e-9
    assert worst_l >= -1e-9


@pytest.mark.acceptance(7)
def test_busemann_equality_cases(detail):
    one = constant_circle(1.0)
    form, bound = circle_form(one), circle_bound(one)
    ell = circle_check(EllipseDensity(1.0, 2.0), 8192)
    q = transfer_report(one).line
    lq = line_check(q)
    detail(f"f=1 form-8pi={form - 8 * math.pi:.1e}; ellipse rel={ell.relative_slack:.1e}; "
           f"line form={lq.form:.9f} rel={lq.relative_slack:.1e}")
    assert abs(form - 8 * math.pi) <= 1e-9 and abs(bound - 8 * math.pi) <= 1e-9
    assert abs(ell.relative_slack) <= 1e-6
    assert lq.form == pytest.approx(2 * math.pi, rel=1e-6)
    assert lq.bound == pytest.approx(2 * math.pi, rel=1e-6)
    assert abs(lq.relative_slack) <= 1e-6


# -- 8 ----------------------------------------------------------------------


@pytest.mark.acceptance(8)
@pytest.mark.parametrize("domain,target", [(Disk((0.0, 0.0), 1.0), DISK_TARGET), (unit_square(), SQUARE_TARGET)],
                         ids=["disk", "square"])
def test_planar_constant_density(domain, target, detail):
    cr = mc_crossing_functional(constant_density(1.0, domain), N, CR_SEED, "auto")
    z = cr.z(target)
    detail(f"{type(domain).__name__}: Cr={cr.value:.6f} target={target:.6f} z={z:+.2f}")
    assert abs(z) <= 3.0
    assert cr.value >= PLANAR_CONSTANT


@pytest.mark.acceptance(8)
def test_planar_thresholds(detail):
    sq = unit_square()
    ratios, lines = [], []
    for r in (0.2, 0.1, 0.05):
        w = threshold_density_planar(r, sq)
        cr = mc_crossing_functional(w, N, CR_SEED, "auto")
        e = mc_edge_density(w, N, E_SEED, "auto")
        bound = theoretical_planar_bound(e.value)
        cse = combined_se(cr, e, planar_bound_slope(e.value))
        assert cr.value >= bound - 3 * cse
        ratios.append(cr.value / bound)
        lines.append(f"r={r}: ratio={ratios[-1]:.4f}")
    detail("; ".join(lines))
    assert ratios[0] > ratios[1] > ratios[2] >= 1.0


# -- 9 ----------------------------------------------------------------------


@pytest.mark.acceptance(9)
def test_midrange_limit(detail):
    r = midrange_limit_ratio(0.1)
    ts = np.linspace(0.05, 0.5, 46)
    vals = np.asarray(midrange_limit_ratio(ts))
    detail(f"ratio(0.1)={r:.8f}, excess={100 * (r / PLANAR_CONSTANT - 1):.3f}%")
    assert abs(r - 0.090108) <= 1e-6
    assert r / PLANAR_CONSTANT - 1 < 6e-4
    # decreasing as t shrinks toward the limit
    assert np.all(np.diff(vals) > 0)


# -- 10 ---------------------------------------------------------------------


@pytest.mark.acceptance(10)
def test_smoothing_consistency(detail):
    D = generate_sphere_threshold(300, math.pi / 3)
    rep = count_crossings(D, "grid", "auto")
    assert rep.valid
    runs = [smoothing_consistency(D, d, N=2 * 10**6, seed=CR_SEED, workers="auto", crossings=rep.crossings)
            for d in (0.1, 0.05)]
    detail("; ".join(f"delta={o['delta']}: gap={o['gap']:.3e} (se {o['std_error']:.1e})" for o in runs))
    for o in runs:
        assert o["lhs"] >= o["rhs"] - 3 * o["std_error"]
    a, b = runs
    assert b["gap"] <= a["gap"] + 3 * math.hypot(a["std_error"], b["std_error"])


# -- 11 ---------------------------------------------------------------------


def _instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 120))
    if rng.random() < 0.6:
        t = float(rng.uniform(0.05, math.pi))
        return generate_sphere_threshold(n, t, sampler=str(rng.choice(["random", "fibonacci"])), seed=seed)
    r = float(rng.uniform(0.02, 1.5))
    return generate_planar_threshold(n, r, unit_square(), seed=seed, sampler=str(rng.choice(["random", "grid"])))


@pytest.mark.acceptance(11)
def test_engine_equivalence_200(detail):
    mism = 0
    total = 0
    for seed in range(200):
        D = _instance(10_000 + seed)
        g, b = count_crossings_grid(D), count_crossings_brute(D)
        mism += (g.crossings, g.degenerate_pairs) != (b.crossings, b.degenerate_pairs)
        total += b.crossings
    detail(f"200 instances, {total} crossings, {mism} mismatches")
    assert mism == 0


@pytest.mark.acceptance(11)
def test_worker_independence():
    D = generate_sphere_threshold(300, 1.2, sampler="random", seed=1)
    counts = {count_crossings(D, "grid", w).crossings for w in (1, 2, 5, "auto")}
    assert len(counts) == 1
    w = band_density_sphere(0.4, 1.8)
    runs = {mc_crossing_functional(w, 300_000, 3, k) for k in (1, 2, 7, "auto")}
    assert len(runs) == 1


@pytest.mark.acceptance(11)
def test_rotation_and_affine_invariance():
    for seed in range(50):
        rng = np.random.default_rng(seed)
        D = generate_sphere_threshold(70, float(rng.uniform(0.2, 2.5)), sampler="random", seed=seed)
        R = random_rotation(rng)
        assert count_crossings_grid(D).crossings == count_crossings_grid(D.with_vertices(D.vertices @ R.T)).crossings
        P = generate_planar_threshold(60, float(rng.uniform(0.1, 0.8)), unit_square(), seed=seed)
        M = rng.normal(size=(2, 2))
        while abs(np.linalg.det(M)) < 0.1:
            M = rng.normal(size=(2, 2))
        T = AffineMap(M, rng.normal(size=2))
        img = Drawing(affine_map(P.ambient, T), T(P.vertices), P.edges)
        assert count_crossings_grid(img).crossings == count_crossings_grid(P).crossings


@pytest.mark.acceptance(11)
def test_bit_identical_reports(tmp_path, capsys):
    outs = []
    for workers in ("1", "3", "1"):
        p = tmp_path / f"r{len(outs)}.json"
        assert cli_main(["verify-sphere", "--t", "1.2", "--samples", "2e5", "--seed", "99",
                         "--workers", workers, "--out", str(p)]) == 0
        rep = json.loads(p.read_text())
        rep["results"].pop("wall_time_ms")
        rep["config"].pop("workers")
        outs.append(json.dumps(rep, sort_keys=True, indent=2))
    assert outs[0] == outs[1] == outs[2]
