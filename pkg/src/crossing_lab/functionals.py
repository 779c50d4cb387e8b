"""Continuous crossing functionals, fluxes, the bathtub profile and bounds.

Monte-Carlo estimators split the sample budget into fixed chunks.  Chunk k
draws from its own counter-based stream Philox(key=(seed, k)) and the
chunk statistics are merged in chunk order, so an estimate depends only on
(seed, N), never on the number of worker threads.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import bernoulli

from . import _kernels
from .busemann import circle_form_samples
from .counting import count_crossings, resolve_workers
from .density import ScaledDensity, SmoothedDensity, smoothed_from_drawing
from .drawing import Drawing
from .quadrature import QuadratureError, integrate_nested_batch
from .sphere import exp_map, fibonacci_sphere, is_sphere, sample_uniform_sphere, tangent_frame

CHUNK = 1 << 16
FOUR_PI = 4.0 * math.pi
FLUX_NORM = 1.0 / (4.0 * math.pi) ** 2
PHI_MAX_ALPHA = 1.0 / (8.0 * math.pi**2)
PLANAR_CONSTANT = 8.0 / (9.0 * math.pi**2)


class DegenerateSampleError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Monte-Carlo engine


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    samples: int
    seed: int
    degenerate: int = 0

    def z(self, target: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.value == target else math.copysign(math.inf, self.value - target)
        return (self.value - target) / self.std_error

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error, "samples": self.samples,
                "seed": self.seed, "degenerate": self.degenerate}


def chunk_rng(seed: int, k: int) -> np.random.Generator:
    key = np.array([int(seed) % 2**64, k], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _chunk_sizes(N: int) -> list[int]:
    full, rest = divmod(int(N), CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def run_mc(sampler, N: int, seed: int, workers=1, strict: bool = True) -> McEstimate:
    """Average ``sampler(rng, size) -> (values, degenerate_count)`` over N draws."""
    if N < 1:
        raise ValueError("need at least one sample")
    sizes = _chunk_sizes(N)

    def job(k):
        vals, deg = sampler(chunk_rng(seed, k), sizes[k])
        vals = np.asarray(vals, dtype=float)
        mean = float(np.mean(vals))
        m2 = float(np.sum((vals - mean) ** 2))
        return len(vals), mean, m2, int(deg)

    workers = resolve_workers(workers)
    if workers == 1 or len(sizes) == 1:
        parts = [job(k) for k in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, range(len(sizes))))
    # Chan et al. pairwise update, always in chunk order
    n, mean, m2, deg = 0, 0.0, 0.0, 0
    for nb, mb, m2b, db in parts:
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
        deg += db
    if strict and deg:
        raise DegenerateSampleError(f"{deg} degenerate predicate outcomes in Monte-Carlo run")
    var = m2 / (n - 1) if n > 1 else 0.0
    return McEstimate(mean, math.sqrt(var / n), n, int(seed), deg)


def _uniform(ambient, rng, k):
    if is_sphere(ambient):
        return sample_uniform_sphere(rng, k)
    return ambient.sample(rng, k)


def _disk_offsets(rng, k, radius):
    r = radius * np.sqrt(rng.random(k))
    phi = 2.0 * math.pi * rng.random(k)
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)


def _smoothed_base(w):
    """(SmoothedDensity, scale) when w is a (possibly rescaled) smoothed density."""
    if isinstance(w, SmoothedDensity):
        return w, 1.0
    if isinstance(w, ScaledDensity):
        base, scale = _smoothed_base(w.base)
        if base is not None:
            return base, scale * w.factor
    return None, 1.0


def _planar_support(w):
    """Support radius R when importance sampling inside B(x, R) pays off."""
    amb = w.ambient
    if is_sphere(amb):
        return None
    R = w.support_radius
    if R is None or math.pi * R * R >= amb.area:
        return None
    return float(R)


def mc_edge_density(w, N: int = 10**6, seed: int = 0, workers=1) -> McEstimate:
    """Estimate e(w) = E w(x1, x2) for independent uniform x1, x2."""
    amb = w.ambient
    R = _planar_support(w)

    if R is None:
        def sampler(rng, k):
            x1 = _uniform(amb, rng, k)
            x2 = _uniform(amb, rng, k)
            return w.evaluate(x1, x2), 0
    else:
        # x2 uniform in the disk B(x1, R); w vanishes outside it
        weight = math.pi * R * R / amb.area

        def sampler(rng, k):
            x1 = _uniform(amb, rng, k)
            x2 = x1 + _disk_offsets(rng, k, R)
            return weight * w.evaluate(x1, x2), 0

    return run_mc(sampler, N, seed, workers)


def _cross_codes(sphere, x1, x2, x3, x4):
    if sphere:
        return _kernels.arc_codes(x1, x2, x3, x4)
    return _kernels.seg_codes(x1, x2, x3, x4)


def _crossing_values(sphere, w12, w34, x1, x2, x3, x4):
    prod = w12 * w34
    live = np.flatnonzero(prod > 0)
    vals = np.zeros_like(prod)
    if live.size == 0:
        return vals, 0
    codes = _cross_codes(sphere, np.ascontiguousarray(x1[live]), np.ascontiguousarray(x2[live]),
                         np.ascontiguousarray(x3[live]), np.ascontiguousarray(x4[live]))
    vals[live] = prod[live] * (codes == _kernels.CROSS)
    deg = int(np.count_nonzero(codes > _kernels.CROSS))
    return vals, deg


def mc_crossing_functional(w, N: int = 10**6, seed: int = 0, workers=1, strict: bool = True) -> McEstimate:
    """Estimate Cr(w) = E[w(x1,x2) w(x3,x4) 1{[x1x2] crosses [x3x4]}].

    Three samplers share this entry point:

    * plain: four independent uniform points;
    * planar densities supported on |x - y| <= R: x2 ~ B(x1, R), x3 ~ B(x1, 2R),
      x4 ~ B(x3, R), weighted by the ratio of disk areas to the domain area
      (two crossing segments of length <= R have endpoints within 2R);
    * kernel-smoothed densities: a pair of edges is drawn uniformly and each
      endpoint is moved by the kernel, which samples w dmu dmu exactly.
    """
    amb = w.ambient
    sphere = is_sphere(amb)
    base, scale = _smoothed_base(w)
    R = _planar_support(w)

    if base is not None:
        D = base.drawing
        weight = scale * scale * (2.0 * D.m) ** 2 / float(D.n) ** 4

        def sampler(rng, k):
            if D.m == 0:
                return np.zeros(k), 0
            x1, x2 = base.sample_edge_endpoints(k, rng)
            x3, x4 = base.sample_edge_endpoints(k, rng)
            codes = _kernels.arc_codes(x1, x2, x3, x4)
            return weight * (codes == _kernels.CROSS), int(np.count_nonzero(codes > _kernels.CROSS))
    elif R is not None:
        A = amb.area
        weight = (math.pi * R * R / A) * (4.0 * math.pi * R * R / A) * (math.pi * R * R / A)

        def sampler(rng, k):
            x1 = _uniform(amb, rng, k)
            x2 = x1 + _disk_offsets(rng, k, R)
            x3 = x1 + _disk_offsets(rng, k, 2.0 * R)
            x4 = x3 + _disk_offsets(rng, k, R)
            vals, deg = _crossing_values(False, w.evaluate(x1, x2), w.evaluate(x3, x4), x1, x2, x3, x4)
            return weight * vals, deg
    else:
        def sampler(rng, k):
            x1 = _uniform(amb, rng, k)
            x2 = _uniform(amb, rng, k)
            x3 = _uniform(amb, rng, k)
            x4 = _uniform(amb, rng, k)
            return _crossing_values(sphere, w.evaluate(x1, x2), w.evaluate(x3, x4), x1, x2, x3, x4)

    return run_mc(sampler, N, seed, workers, strict=strict)


# ---------------------------------------------------------------------------
# closed forms


def _sin_minus_tcos(t):
    """sin t - t cos t, with a series near 0 where the difference cancels."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < 1e-2
    t2 = t * t
    series = t * t2 * (1.0 / 3.0 - t2 / 30.0 + t2 * t2 / 840.0)
    return np.where(small, series, np.sin(t) - t * np.cos(t))


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def _check_e(e):
    e = np.asarray(e, dtype=float)
    if np.any(e < 0) or np.any(e > 1) or np.any(np.isnan(e)):
        raise ValueError("edge density must lie in [0, 1]")
    return e


def _t_of_e(e):
    # 1 - cos t = 2 sin^2(t/2) = 2e
    return 2.0 * np.arcsin(np.sqrt(np.clip(e, 0.0, 1.0)))


def theoretical_sphere_bound(e):
    """(sin t - t cos t)^2 / (8 pi^2) with cos t = 1 - 2e."""
    e = _check_e(e)
    return _scalar(_sin_minus_tcos(_t_of_e(e)) ** 2 / (8.0 * math.pi**2))


def sphere_bound_slope(e) -> float:
    """Derivative of the sphere bound in e: t (sin t - t cos t) / (2 pi^2)."""
    t = float(_t_of_e(_check_e(e)))
    return t * float(_sin_minus_tcos(t)) / (2.0 * math.pi**2)


def theoretical_planar_bound(e):
    e = np.asarray(e, dtype=float)
    if np.any(e < 0):
        raise ValueError("edge density must be nonnegative")
    return _scalar(PLANAR_CONSTANT * e**3)


def planar_bound_slope(e) -> float:
    return 3.0 * PLANAR_CONSTANT * float(e) ** 2


def discrete_sphere_bound(n, e):
    """n^4 (sin t - t cos t)^2 / (64 pi^2), the asymptotic crossing count of a threshold drawing."""
    e = _check_e(e)
    return _scalar(float(n) ** 4 * _sin_minus_tcos(_t_of_e(e)) ** 2 / (64.0 * math.pi**2))


def threshold_edge_density(t):
    """(1 - cos t) / 2, written as sin^2(t/2) to avoid cancellation."""
    return _scalar(np.sin(np.asarray(t, dtype=float) / 2.0) ** 2)


def midrange_limit_ratio(t):
    """Sphere bound divided by e^3 along the threshold family; tends to 8/(9 pi^2) as t -> 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t > math.pi):
        raise ValueError("t must lie in (0, pi]")
    e = np.sin(t / 2.0) ** 2
    return _scalar(_sin_minus_tcos(t) ** 2 / (8.0 * math.pi**2) / e**3)


def combined_se(cr: McEstimate, e: McEstimate, slope: float) -> float:
    """Standard error of Cr - bound(e) by the delta method (independent streams)."""
    return math.hypot(cr.std_error, slope * e.std_error)


# ---------------------------------------------------------------------------
# bathtub profile


def bathtub_tau(alpha):
    """tau in [0, pi] with 1 - cos tau = 16 pi^2 alpha."""
    a = np.asarray(alpha, dtype=float)
    if np.any(a < 0) or np.any(a > PHI_MAX_ALPHA * (1 + 1e-12)) or np.any(np.isnan(a)):
        raise ValueError("alpha must lie in [0, 1/(8 pi^2)]")
    # 2 sin^2(tau/2) = 16 pi^2 alpha
    return _scalar(2.0 * np.arcsin(np.minimum(1.0, 2.0 * math.pi * np.sqrt(2.0 * a))))


def bathtub_phi(alpha):
    """phi(alpha) = (sin tau - tau cos tau) / (4 pi)^2."""
    return _scalar(FLUX_NORM * _sin_minus_tcos(bathtub_tau(alpha)))


def bathtub_left_fill_oracle(M: float, grid: int = 1000) -> float:
    """Minimal cost of int u dnu over 0 <= dnu <= sin u du with mass M, by greedy left fill.

    The interval (0, pi) is cut into ``grid`` cells of capacity
    cos u_i - cos u_{i+1}, each charged at its midpoint.
    """
    if not 0.0 <= M <= 2.0:
        raise ValueError("mass must lie in [0, 2]")
    cap, cost = _fill_cells(grid)
    return float(_greedy_cost(cap, cost, M))


def _fill_cells(grid: int):
    if grid < 2:
        raise ValueError("grid needs at least 2 cells")
    u = np.linspace(0.0, math.pi, grid + 1)
    cap = np.cos(u[:-1]) - np.cos(u[1:])
    return cap, 0.5 * (u[:-1] + u[1:])


def _greedy_cost(cap, cost, M):
    cum = np.concatenate([[0.0], np.cumsum(cap)])
    k = int(np.searchsorted(cum, M, side="right")) - 1
    k = min(k, len(cap))
    full = float(np.dot(cap[:k], cost[:k]))
    if k < len(cap):
        full += (M - cum[k]) * cost[k]
    return full


def random_feasible_costs(M: float, grid: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Costs of random discrete measures 0 <= nu_i <= cap_i with total mass M.

    Each measure is nu_i = cap_i min(1, lam r_i) for random weights r_i, with
    lam found by bisection so that the total mass is M.
    """
    cap, cost = _fill_cells(grid)
    out = np.empty(count)
    for c in range(count):
        r = rng.random(grid) ** rng.uniform(0.2, 5.0)
        lo, hi = 0.0, 1.0
        while np.sum(cap * np.minimum(1.0, hi * r)) < M:
            hi *= 2.0
            if hi > 1e300:
                break
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if np.sum(cap * np.minimum(1.0, mid * r)) < M:
                lo = mid
            else:
                hi = mid
        nu = cap * np.minimum(1.0, hi * r)
        out[c] = float(np.dot(nu, cost)) * M / float(np.sum(nu)) if np.sum(nu) > 0 else 0.0
    return out


def _tau_cot_gap(tau):
    """3 (1 - tau cot tau) - tau^2, with the Bernoulli series for small tau."""
    tau = np.asarray(tau, dtype=float)
    small = tau < 0.1
    # 1 - tau cot tau = sum_{k>=1} 2^{2k} |B_2k| tau^{2k} / (2k)!
    B = bernoulli(16)
    series = np.zeros_like(tau)
    for k in range(2, 9):
        series += 3.0 * 2.0 ** (2 * k) * abs(B[2 * k]) / math.factorial(2 * k) * tau ** (2 * k)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = 3.0 * (1.0 - tau * np.cos(tau) / np.sin(tau)) - tau * tau
    return np.where(small, series, direct)


@dataclass
class ConvexityReport:
    worst_second_difference: float
    worst_tau_gap: float
    grid: int

    def ok(self, tol: float = 1e-9) -> bool:
        return self.worst_second_difference >= -tol and self.worst_tau_gap >= -tol


def convexity_check(grid: int = 10_000) -> ConvexityReport:
    """Second differences of phi^(2/3) on a uniform alpha grid and the tau inequality."""
    if grid < 3:
        raise ValueError("grid too small")
    alpha = np.linspace(0.0, PHI_MAX_ALPHA, grid)
    h = np.asarray(bathtub_phi(alpha)) ** (2.0 / 3.0)
    d2 = h[:-2] - 2.0 * h[1:-1] + h[2:]
    tau = np.linspace(1e-6, math.pi - 1e-6, grid)
    gap = _tau_cot_gap(tau)
    return ConvexityReport(float(d2.min()), float(gap.min()), grid)


# ---------------------------------------------------------------------------
# fluxes


@dataclass(frozen=True)
class FluxValue:
    g: float
    a: float
    at: tuple
    quad_tol: float
    g_error: float = 0.0
    a_error: float = 0.0


def _density_breaks(w, limit):
    bps = [b for b in getattr(w, "breakpoints", ()) if 0 < b < limit]
    base, _ = _smoothed_base(w)
    if base is not None:
        # localised bumps: seed the panels at a quarter of the kernel radius
        bps += list(np.arange(base.delta / 4.0, limit, base.delta / 4.0))
    return bps


def _fiber_kernels(base, x, v, grid):
    """K(exp_x(+s v), p) and K(exp_x(-s v), p) on s = 0, h, ..., pi for vertices near the geodesic."""
    P = base.drawing.vertices
    normal = np.cross(x, v)
    near = np.flatnonzero(np.abs(P @ normal) < math.sin(base.delta))
    s = np.linspace(0.0, math.pi, grid + 1)
    cx, cv = P[near] @ x, P[near] @ v
    c, sn = np.cos(s), np.sin(s)
    plus = base.kernel(np.arccos(np.clip(np.outer(cx, c) + np.outer(cv, sn), -1.0, 1.0)))
    minus = base.kernel(np.arccos(np.clip(np.outer(cx, c) - np.outer(cv, sn), -1.0, 1.0)))
    return near, s, plus, minus


def _smoothed_flux_grid(base, scale, x, v, grid):
    """(g, a) for a kernel-smoothed density by the trapezoid rule on an (s, r) grid.

    w(exp(s v), exp(-r v)) = n^-2 sum_(a,b) k_a(s) k_b(r) over oriented edges,
    so each weight sum is a correlation sum_k S(k h) (Q_b * R_b)(k), done by FFT.
    """
    near, s, plus, minus = _fiber_kernels(base, x, v, grid)
    if near.size == 0:
        return 0.0, 0.0
    h = s[1] - s[0]
    tw = np.full(grid + 1, h)
    tw[0] = tw[-1] = 0.5 * h
    # oriented edges among the near vertices: Q_b(s) = sum_a A[a, b] k_a(s)
    pos = np.full(base.drawing.n, -1)
    pos[near] = np.arange(near.size)
    ptr, idx = base._adj_ptr, base._adj_idx
    A = np.zeros((near.size, near.size))
    for i, a in enumerate(near):
        nb = pos[idx[ptr[a]:ptr[a + 1]]]
        A[i, nb[nb >= 0]] = 1.0
    Q = A.T @ (plus * tw)
    R = minus * tw
    L = 2 * grid + 1
    nfft = 1 << (L - 1).bit_length()
    conv = np.fft.irfft(np.fft.rfft(Q, nfft) * np.fft.rfft(R, nfft), nfft)[:, :L].sum(axis=0)
    u = h * np.arange(L)
    inside = u < math.pi
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(u > 0, np.sin(u) / u, 1.0)
    norm = scale * FLUX_NORM / float(base.drawing.n) ** 2
    g = norm * float(np.sum(conv[inside] * np.sin(u[inside])))
    a = norm * float(np.sum(conv[inside] * sinc[inside]))
    return g, a


def _smoothed_flux_batch(base, scale, X, theta, tol):
    """Grid doubling with Richardson extrapolation (the trapezoid error is O(h^2))."""
    V = tangent_frame(X).direction(theta)
    out = np.zeros((X.shape[0], 4))
    # start where the kernel bump is covered by ~60 nodes
    G = 1 << max(8, int(math.ceil(math.log2(60.0 * math.pi / (2.0 * base.delta)))))
    for k in range(X.shape[0]):
        grid = G
        prev = np.array(_smoothed_flux_grid(base, scale, X[k], V[k], grid))
        rich_prev = None
        while True:
            grid *= 2
            cur = np.array(_smoothed_flux_grid(base, scale, X[k], V[k], grid))
            rich = (4.0 * cur - prev) / 3.0
            if rich_prev is not None:
                err = np.abs(rich - rich_prev)
                if np.all(err <= tol * np.abs(rich) + 1e-16):
                    break
                if grid >= 1 << 16:
                    raise QuadratureError("smoothed flux grid did not converge", tuple(rich), tuple(err))
            prev, rich_prev = cur, rich
        out[k] = (*rich, *err)
    return out[:, 0], out[:, 1], out[:, 2], out[:, 3]


def flux_batch(w, X, theta, tol: float = 1e-6):
    """g and a at the pairs (X[k], theta[k]); returns (g, a, g_err, a_err) arrays.

    The double integral over endpoint distances (s, r) runs in u = s + r and
    z = s.  On the sphere u in (0, pi), z in (0, u), weights sin u and
    sin(u)/u, normalised by (4 pi)^-2.  In a domain u runs up to the sum of
    the two chord exits and the weights are u and 1, normalised by A^-2.
    """
    if not 1e-9 <= tol <= 1e-3:
        raise ValueError("tol must lie in [1e-9, 1e-3]")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (X.shape[0],)).copy()
    k = X.shape[0]
    amb = w.ambient
    base, scale = _smoothed_base(w)
    if base is not None:
        return _smoothed_flux_batch(base, scale, X, theta, tol)
    if is_sphere(amb):
        V = tangent_frame(X).direction(theta)
        lo = np.zeros(k)
        hi = np.full(k, math.pi)
        bps = [_density_breaks(w, math.pi)] * k

        def inner(u, z, o):
            P = exp_map(X[o], V[o], z)
            Q = exp_map(X[o], V[o], -(u - z))
            return w.evaluate(P, Q)

        def zb(u, o):
            return np.zeros_like(u), u

        def weight(u, o):
            s = np.sin(u)
            return FLUX_NORM * np.stack([s, s / u], axis=1)
    else:
        V = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        sp = np.array([amb.chord_exit(X[i], theta[i]) for i in range(k)])
        rp = np.array([amb.chord_exit(X[i], theta[i] + math.pi) for i in range(k)])
        lo = np.zeros(k)
        hi = sp + rp
        norm = 1.0 / amb.area**2
        bps = [sorted(set([sp[i], rp[i]] + _density_breaks(w, hi[i]))) for i in range(k)]

        def inner(u, z, o):
            P = X[o] + z[:, None] * V[o]
            Q = X[o] - (u - z)[:, None] * V[o]
            return w.evaluate(P, Q)

        def zb(u, o):
            return np.maximum(0.0, u - rp[o]), np.minimum(u, sp[o])

        def weight(u, o):
            return norm * np.stack([u, np.ones_like(u)], axis=1)

    value, error = integrate_nested_batch(inner, weight, lo, hi, zb, rel_tol=tol, abs_tol=1e-16,
                                          breakpoints=bps)
    return value[:, 0], value[:, 1], error[:, 0], error[:, 1]


def fluxes(w, x, theta: float, tol: float = 1e-6) -> FluxValue:
    g, a, ge, ae = flux_batch(w, np.asarray(x, dtype=float)[None, :], [theta], tol)
    return FluxValue(float(g[0]), float(a[0]), (tuple(float(v) for v in np.ravel(x)), float(theta)), tol,
                     float(ge[0]), float(ae[0]))


def flux_g(w, x, theta: float, tol: float = 1e-6) -> float:
    return fluxes(w, x, theta, tol).g


def flux_a(w, x, theta: float, tol: float = 1e-6) -> float:
    return fluxes(w, x, theta, tol).a


@dataclass
class FiberProfile:
    u: np.ndarray
    b: np.ndarray

    def cap_ok(self, tol: float = 1e-9) -> bool:
        return bool(np.all(self.b <= self.u + tol) and np.all(self.b >= -tol))


def fiber_profile(w, x, theta: float, grid: int = 256) -> FiberProfile:
    """b(u) = int_0^u w(exp_x(z v), exp_x(-(u - z) v)) dz on a u-grid in (0, pi)."""
    from .quadrature import integrate_batch

    x = np.asarray(x, dtype=float)
    v = tangent_frame(x).direction(theta)
    u = np.linspace(0.0, math.pi, grid + 2)[1:-1]

    def f(z, o):
        P = exp_map(x, v, z)
        Q = exp_map(x, v, -(u[o] - z))
        return w.evaluate(P, Q)

    res = integrate_batch(f, np.zeros_like(u), u, rel_tol=1e-8)
    return FiberProfile(u, res.value)


# ---------------------------------------------------------------------------
# identities


@dataclass
class IdentityReport:
    quantity: str
    value: float
    error: float
    nodes: int
    theta_grid: int
    detail: dict = field(default_factory=dict)


def _outer_nodes(amb, x_samples, seed):
    if isinstance(x_samples, np.ndarray):
        return x_samples
    if is_sphere(amb):
        if x_samples == "mc" or isinstance(x_samples, tuple):
            count = x_samples[1] if isinstance(x_samples, tuple) else 64
            return sample_uniform_sphere(chunk_rng(seed, 0), count)
        return fibonacci_sphere(int(x_samples))
    count = int(x_samples[1]) if isinstance(x_samples, tuple) else int(x_samples)
    return amb.sample(chunk_rng(seed, 0), count)


def _flux_grid(w, X, theta_grid, tol, need_g, need_a):
    """g and a on the half grid theta_j, j < M/2, extended by g(theta + pi) = g(theta)."""
    if theta_grid < 64 or theta_grid % 2:
        raise ValueError("theta grid must be even and at least 64")
    half = theta_grid // 2
    th = 2.0 * math.pi * np.arange(half) / theta_grid
    XX = np.repeat(X, half, axis=0)
    TT = np.tile(th, len(X))
    g, a, ge, ae = flux_batch(w, XX, TT, tol)
    g = g.reshape(len(X), half)
    a = a.reshape(len(X), half)
    return np.concatenate([g, g], axis=1), np.concatenate([a, a], axis=1), float(ge.max()), float(ae.max())


def flux_crossing_representation(w, x_samples=64, theta_grid: int = 64, tol: float = 1e-7,
                                 seed: int = 0) -> IdentityReport:
    """Cr(w) as the integral over x of B(g(x, .)), B the |sin|-kernel quadratic form.

    On the sphere the outer integral is 4 pi times the mean over Fibonacci
    nodes (or uniform samples with ``x_samples=("mc", count)``); in a domain
    it is A times the mean over uniform samples.
    """
    amb = w.ambient
    X = _outer_nodes(amb, x_samples, seed)
    g, _, gerr, _ = _flux_grid(w, X, theta_grid, tol, True, False)
    forms = np.array([circle_form_samples(row) for row in g])
    scale = FOUR_PI if is_sphere(amb) else amb.area
    value = scale * float(np.mean(forms))
    spread = scale * float(np.std(forms, ddof=1) / math.sqrt(len(forms))) if len(forms) > 1 else 0.0
    return IdentityReport("Cr_flux", value, spread, len(X), theta_grid,
                          {"flux_quad_error": gerr, "g_min": float(g.min()), "g_max": float(g.max())})


def incidence_identity_check(w, x_samples=64, theta_grid: int = 64, tol: float = 1e-7,
                             seed: int = 0, lhs: float | None = None) -> dict:
    """e(w) against the integral of the incidence flux a over directions and points."""
    amb = w.ambient
    X = _outer_nodes(amb, x_samples, seed)
    _, a, _, aerr = _flux_grid(w, X, theta_grid, tol, False, True)
    per_x = 2.0 * math.pi * a.mean(axis=1)
    scale = FOUR_PI if is_sphere(amb) else amb.area
    rhs = scale * float(np.mean(per_x))
    if lhs is None:
        lhs = w.closed_form_density()
    return {"lhs": lhs, "rhs": rhs, "gap": None if lhs is None else abs(rhs - lhs),
            "nodes": len(X), "theta_grid": theta_grid, "flux_quad_error": aerr}


# ---------------------------------------------------------------------------
# pointwise bounds


def bathtub_slack_batch(w, X, theta, tol: float = 1e-8) -> np.ndarray:
    """g - phi(a) at each (X[k], theta[k]) on the sphere."""
    g, a, _, _ = flux_batch(w, X, theta, tol)
    a = np.clip(a, 0.0, PHI_MAX_ALPHA)
    return g - np.asarray(bathtub_phi(a))


def planar_pointwise_bound_check(domain, w, x, theta: float, tol: float = 1e-8) -> float:
    """g_Omega - (2 sqrt 2 / 3) A a_Omega^(3/2) at one point and direction."""
    if w.ambient is not domain and w.ambient != domain:
        raise ValueError("density lives on a different domain")
    fv = fluxes(w, x, theta, tol)
    return fv.g - (2.0 * math.sqrt(2.0) / 3.0) * domain.area * max(fv.a, 0.0) ** 1.5


# ---------------------------------------------------------------------------
# smoothing


def smoothing_consistency(D: Drawing, delta: float, N: int = 10**6, seed: int = 0, workers=1,
                          crossings: int | None = None, K: float | None = None) -> dict:
    """Compare Cr of the kernel-smoothed density with 8 cr(D) / n^4.

    The gap is reported together with gap / sqrt(delta); when ``K`` is
    given, ``within_K`` records whether gap <= K sqrt(delta).
    """
    t0 = time.perf_counter()
    if crossings is None:
        rep = count_crossings(D, "grid", workers)
        if not rep.valid:
            raise DegenerateSampleError("drawing has degenerate edge pairs")
        crossings = rep.crossings
    rhs = 8.0 * crossings / float(D.n) ** 4
    if D.m == 0:
        est = McEstimate(0.0, 0.0, int(N), int(seed))
    else:
        sp = smoothed_from_drawing(D, delta, grid=20_000)
        est = mc_crossing_functional(sp.w, N, seed, workers)
    gap = est.value - rhs
    out = {
        "delta": delta, "lhs": est.value, "std_error": est.std_error, "rhs": rhs, "gap": gap,
        "gap_over_sqrt_delta": gap / math.sqrt(delta), "samples": est.samples, "seed": seed,
        "crossings": int(crossings), "n": D.n, "m": D.m,
        "wall_time_ms": 1e3 * (time.perf_counter() - t0),
    }
    if K is not None:
        out["within_K"] = gap <= K * math.sqrt(delta)
    return out


__all__ = [
    "CHUNK", "FLUX_NORM", "PHI_MAX_ALPHA", "PLANAR_CONSTANT",
    "McEstimate", "FluxValue", "FiberProfile", "ConvexityReport", "IdentityReport", "QuadratureError",
    "DegenerateSampleError", "run_mc", "chunk_rng", "mc_edge_density", "mc_crossing_functional",
    "theoretical_sphere_bound", "theoretical_planar_bound", "discrete_sphere_bound",
    "midrange_limit_ratio", "threshold_edge_density", "sphere_bound_slope", "planar_bound_slope",
    "combined_se", "bathtub_tau", "bathtub_phi", "bathtub_left_fill_oracle", "random_feasible_costs",
    "convexity_check", "flux_batch", "fluxes", "flux_g", "flux_a", "fiber_profile",
    "flux_crossing_representation", "incidence_identity_check", "bathtub_slack_batch",
    "planar_pointwise_bound_check", "smoothing_consistency",
]
