"""One-dimensional Busemann inequalities on the circle and on the line.

Circle:  B(f, f) = int int f(t) f(s) |sin(t - s)| dt ds >= (1/pi^2) (int f^(2/3))^3.
Line:    int int q(u) q(v) |u - v| du dv >= (2/pi^2) (int q^(2/3))^3.

The circle form is evaluated spectrally.  With
|sin x| = 2/pi - (4/pi) sum_m cos(2 m x) / (4 m^2 - 1), a density with
Fourier coefficients c_k gives B = (2 pi)^2 sum_k kappa_k |c_k|^2, where
kappa_0 = 2/pi and kappa_{+-2m} = -(2/pi) / (4 m^2 - 1).  For samples of a
smooth function this is the periodic trapezoid rule with the kink of |sin|
integrated exactly; for grid densities the coefficients of the piecewise
linear interpolant are used, which makes the value exact for that
interpolant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate as sp_integrate
from scipy import optimize

ALIAS_TERMS = 64


class BusemannError(ValueError):
    pass


def _kappa(k):
    """Fourier coefficients of |sin x| (zero for odd k)."""
    k = np.abs(np.asarray(k))
    with np.errstate(divide="ignore"):
        return np.where(k % 2 == 0, -(2.0 / math.pi) / (k.astype(float) ** 2 - 1.0), 0.0)


def circle_form_samples(values) -> float:
    """B(f, f) from samples f(2 pi j / M), j < M, of a smooth periodic f."""
    f = np.asarray(values, dtype=float)
    M = f.shape[-1]
    c = np.fft.rfft(f) / M
    k = np.arange(c.shape[-1])
    w = np.where(k == 0, 1.0, 2.0)
    if M % 2 == 0:
        w[-1] = 1.0
    return float((2.0 * math.pi) ** 2 * np.sum(w * _kappa(k) * np.abs(c) ** 2))


def _pl_kernel_weights(M: int) -> np.ndarray:
    """Alias-summed kernel for the piecewise-linear interpolant on M nodes.

    Hat functions of width 2h have Fourier factor sinc^2(pi k / M), so
    residue r collects kappa_k sinc^4(pi k / M) over k = r + l M.
    """
    r = np.arange(M)[:, None]
    l = np.arange(-ALIAS_TERMS, ALIAS_TERMS + 1)[None, :]
    k = r + l * M
    x = np.pi * k / M
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(k == 0, 1.0, np.sin(x) / x)
    return np.sum(_kappa(k) * s**4, axis=1)


# ---------------------------------------------------------------------------
# circle densities


class CircleDensity:
    """A nonnegative function on [0, 2 pi)."""

    def __call__(self, theta) -> np.ndarray:
        raise NotImplementedError

    def kinks(self) -> list[float]:
        return []

    def samples(self, M: int) -> np.ndarray:
        return np.asarray(self(2.0 * math.pi * np.arange(M) / M), dtype=float)


@dataclass(frozen=True)
class TrigDensity(CircleDensity):
    """max(0, a0 + sum_k a_k cos k t + b_k sin k t); coefficients a0, a1, b1, a2, b2, ..."""

    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) % 2 != 1:
            raise BusemannError("trig density needs a0 followed by (a_k, b_k) pairs")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def raw(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.full(theta.shape, self.coeffs[0])
        for k in range(1, (len(self.coeffs) - 1) // 2 + 1):
            out = out + self.coeffs[2 * k - 1] * np.cos(k * theta) + self.coeffs[2 * k] * np.sin(k * theta)
        return out

    def __call__(self, theta):
        return np.maximum(self.raw(theta), 0.0)

    @property
    def is_constant(self) -> bool:
        return all(c == 0.0 for c in self.coeffs[1:])

    @property
    def clipped(self) -> bool:
        return bool(np.min(self.raw(np.linspace(0, 2 * math.pi, 4097))) < 0)

    def kinks(self) -> list[float]:
        grid = np.linspace(0.0, 2.0 * math.pi, 8193)
        vals = self.raw(grid)
        out = []
        for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
            out.append(optimize.brentq(self.raw, grid[i], grid[i + 1], xtol=1e-15))
        out += [float(x) for x in grid[np.flatnonzero(vals == 0.0)]]
        return sorted(out)


@dataclass(frozen=True)
class EllipseDensity(CircleDensity):
    """f = r_E^3 with r_E(t) = (cos^2 t / p^2 + sin^2 t / q^2)^(-1/2), optionally rotated."""

    p: float
    q: float
    angle: float = 0.0

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0):
            raise BusemannError("ellipse semi-axes must be positive")

    def __call__(self, theta):
        t = np.asarray(theta, dtype=float) - self.angle
        return (np.cos(t) ** 2 / self.p**2 + np.sin(t) ** 2 / self.q**2) ** -1.5

    def integral_23_exact(self) -> float:
        # f^(2/3) = r_E^2 integrates to twice the ellipse area
        return 2.0 * math.pi * self.p * self.q


@dataclass
class GridCircleDensity(CircleDensity):
    """Periodic piecewise-linear interpolant of values on a uniform grid."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size < 4:
            raise BusemannError("grid density needs at least 4 values")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise BusemannError("grid density must be finite and nonnegative")
        self.values = v

    @property
    def M(self) -> int:
        return self.values.size

    def __call__(self, theta):
        t = np.mod(np.asarray(theta, dtype=float), 2.0 * math.pi) * self.M / (2.0 * math.pi)
        i = np.floor(t).astype(int) % self.M
        frac = t - np.floor(t)
        return (1.0 - frac) * self.values[i] + frac * self.values[(i + 1) % self.M]


@dataclass
class PeriodizedDensity(CircleDensity):
    """(f(t) + f(t + pi)) / 2."""

    base: CircleDensity

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        return 0.5 * (self.base(theta) + self.base(theta + math.pi))

    def kinks(self) -> list[float]:
        ks = self.base.kinks()
        return sorted(set([k % math.pi for k in ks] + [(k % math.pi) + math.pi for k in ks]))


@dataclass
class ScaledCircleDensity(CircleDensity):
    base: CircleDensity
    factor: float

    def __call__(self, theta):
        return self.factor * self.base(theta)

    def kinks(self) -> list[float]:
        return self.base.kinks()


def constant_circle(c: float) -> TrigDensity:
    if c < 0:
        raise BusemannError("constant density must be nonnegative")
    return TrigDensity((float(c),))


def pi_periodize(f: CircleDensity) -> CircleDensity:
    """Average of f and its half-turn; grid densities stay grid densities (even M)."""
    if isinstance(f, GridCircleDensity) and f.M % 2 == 0:
        return GridCircleDensity(0.5 * (f.values + np.roll(f.values, -f.M // 2)))
    if isinstance(f, TrigDensity) and not f.clipped:
        c = list(f.coeffs)
        for k in range(1, (len(c) - 1) // 2 + 1):
            if k % 2:
                c[2 * k - 1] = 0.0
                c[2 * k] = 0.0
        return TrigDensity(tuple(c))
    if isinstance(f, EllipseDensity):
        return f
    return PeriodizedDensity(f)


def is_pi_periodic(f: CircleDensity, tol: float = 1e-12) -> bool:
    t = np.linspace(0.0, math.pi, 513)
    a = np.asarray(f(t))
    b = np.asarray(f(t + math.pi))
    return bool(np.max(np.abs(a - b)) <= tol * max(1.0, float(np.max(np.abs(a)))))


# ---------------------------------------------------------------------------
# circle form and bound


def circle_form(f: CircleDensity, grid: int = 4096) -> float:
    """B(f, f) = int int f(t) f(s) |sin(t - s)| dt ds."""
    if grid < 256:
        raise BusemannError("grid must have at least 256 nodes")
    if isinstance(f, GridCircleDensity):
        M = f.M
        c = np.fft.fft(f.values) / M
        return float((2.0 * math.pi) ** 2 * np.sum(_pl_kernel_weights(M) * np.abs(c) ** 2))
    return circle_form_samples(f.samples(grid))


def circle_form_direct(f: CircleDensity, grid: int = 512, kernel: str = "exact") -> float:
    """O(grid^2) double sum; ``kernel="trapezoid"`` uses |sin| at the nodes instead
    of the exactly integrated kernel."""
    if isinstance(f, GridCircleDensity):
        v = f.values
        W = np.real(np.fft.ifft(_pl_kernel_weights(f.M))) * f.M
    else:
        v = f.samples(grid)
        M = grid
        if kernel == "trapezoid":
            W = np.abs(np.sin(2.0 * math.pi * np.arange(M) / M))
        else:
            k = np.fft.fftfreq(M, 1.0 / M).astype(int)
            W = np.real(np.fft.ifft(_kappa(k))) * M
    M = v.size
    h = 2.0 * math.pi / M
    idx = (np.arange(M)[:, None] - np.arange(M)[None, :]) % M
    if kernel == "trapezoid" and not isinstance(f, GridCircleDensity):
        return float(h * h * v @ W[idx] @ v)
    # W holds the discrete kernel whose DFT is kappa; convert to quadrature weights
    return float((2.0 * math.pi) ** 2 / M**2 * v @ W[idx] @ v)


def integral_23(f: CircleDensity, tol: float = 1e-12) -> float:
    """int_0^{2 pi} f^(2/3) dt."""
    if isinstance(f, GridCircleDensity):
        a = f.values
        b = np.roll(a, -1)
        return _pl_power_integral(a, b, np.full(a.size, 2.0 * math.pi / f.M))
    if isinstance(f, EllipseDensity):
        return f.integral_23_exact()
    if isinstance(f, TrigDensity) and len(f.coeffs) == 1:
        return 2.0 * math.pi * f.coeffs[0] ** (2.0 / 3.0)
    pts = [k for k in f.kinks() if 0.0 < k < 2.0 * math.pi]
    edges = [0.0] + sorted(pts) + [2.0 * math.pi]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 0:
            continue
        val, _ = sp_integrate.quad(lambda t: float(f(t)) ** (2.0 / 3.0), lo, hi,
                                   epsabs=tol, epsrel=tol, limit=500)
        total += val
    return total


def _pl_power_integral(a, b, h) -> float:
    """Exact int of (linear from a to b)^(2/3) over cells of width h."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = b - a
    same = np.abs(diff) <= 1e-12 * np.maximum(np.abs(a), np.abs(b))
    with np.errstate(invalid="ignore", divide="ignore"):
        val = 0.6 * (b ** (5.0 / 3.0) - a ** (5.0 / 3.0)) / diff
    mid = (0.5 * (a + b)) ** (2.0 / 3.0)
    return float(np.sum(h * np.where(same, mid, val)))


def circle_bound(f: CircleDensity) -> float:
    """(1/pi^2) (int f^(2/3))^3."""
    return integral_23(f) ** 3 / math.pi**2


@dataclass
class BusemannReport:
    form: float
    bound: float
    slack: float
    relative_slack: float
    quad_error: float
    grid: int
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"form": self.form, "bound": self.bound, "slack": self.slack,
             "relative_slack": self.relative_slack, "quad_error": self.quad_error, "grid": self.grid}
        d.update(self.detail)
        return d


def circle_check(f: CircleDensity, grid: int = 4096) -> BusemannReport:
    """B(f, f) - bound, with the change between grid and grid/2 as the error estimate."""
    form = circle_form(f, grid)
    coarse = circle_form(f, max(256, grid // 2)) if not isinstance(f, GridCircleDensity) else form
    fine = circle_form(f, 2 * grid) if not isinstance(f, GridCircleDensity) else form
    bound = circle_bound(f)
    slack = form - bound
    rel = slack / form if form > 0 else 0.0
    err = abs(form - coarse) + 1e-13 * max(abs(form), abs(bound))
    return BusemannReport(form, bound, slack, rel, err, grid,
                          {"grid_ratio": fine / form if form else 1.0})


# ---------------------------------------------------------------------------
# line densities


@dataclass
class LineDensity:
    """Piecewise-linear q on sorted nodes; zero outside unless tails are set.

    ``tail_left`` / ``tail_right`` are coefficients c of an analytic c |u|^-3
    continuation beyond the first / last node.
    """

    nodes: np.ndarray
    values: np.ndarray
    tail_left: float = 0.0
    tail_right: float = 0.0

    def __post_init__(self):
        u = np.asarray(self.nodes, dtype=float)
        q = np.asarray(self.values, dtype=float)
        if u.shape != q.shape or u.ndim != 1 or u.size < 2:
            raise BusemannError("nodes and values must be matching 1-d arrays")
        if np.any(np.diff(u) <= 0):
            raise BusemannError("nodes must be strictly increasing")
        if np.any(q < 0) or not np.all(np.isfinite(q)):
            raise BusemannError("line density must be finite and nonnegative")
        if (self.tail_left or self.tail_right) and (u[0] >= 0 or u[-1] <= 0):
            raise BusemannError("tails need nodes on both sides of 0")
        self.nodes = u
        self.values = q

    @classmethod
    def on_interval(cls, lo: float, hi: float, values) -> "LineDensity":
        v = np.asarray(values, dtype=float)
        return cls(np.linspace(lo, hi, v.size), v)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = np.interp(u, self.nodes, self.values, left=0.0, right=0.0)
        if self.tail_left:
            out = np.where(u < self.nodes[0], self.tail_left * np.abs(u) ** -3.0, out)
        if self.tail_right:
            out = np.where(u > self.nodes[-1], self.tail_right * np.abs(u) ** -3.0, out)
        return out

    def mass(self) -> float:
        h = np.diff(self.nodes)
        body = float(np.sum(0.5 * h * (self.values[:-1] + self.values[1:])))
        return body + self._tail_mass(self.tail_left, self.nodes[0]) + self._tail_mass(self.tail_right, self.nodes[-1])

    @staticmethod
    def _tail_mass(c, L):
        return c / (2.0 * L * L) if c else 0.0


_GL3_X, _GL3_W = np.polynomial.legendre.leggauss(3)


def line_form(q: LineDensity) -> float:
    """int int q(u) q(v) |u - v| du dv by the layer-cake identity 2 int Q (M - Q).

    Q is the running mass; on each linear cell Q is quadratic, so three
    Gauss points integrate Q (M - Q) exactly.  Analytic u^-3 tails add
    c M / L - c^2 / (6 L^3) each.
    """
    u, v = q.nodes, q.values
    h = np.diff(u)
    cell_mass = 0.5 * h * (v[:-1] + v[1:])
    left = LineDensity._tail_mass(q.tail_left, u[0])
    right = LineDensity._tail_mass(q.tail_right, u[-1])
    Q0 = left + np.concatenate([[0.0], np.cumsum(cell_mass)])[:-1]
    M = left + float(np.sum(cell_mass)) + right
    s = 0.5 * (_GL3_X + 1.0)
    slope = (v[1:] - v[:-1])[:, None]
    # Q(u_i + s h) = Q0 + h (v_i s + (v_{i+1} - v_i) s^2 / 2)
    Q = Q0[:, None] + h[:, None] * (v[:-1, None] * s + 0.5 * slope * s * s)
    body = float(np.sum(h[:, None] * 0.5 * _GL3_W * Q * (M - Q)))
    total = 2.0 * body
    for c, L in ((q.tail_left, abs(u[0])), (q.tail_right, abs(u[-1]))):
        if c:
            total += c * M / L - c * c / (6.0 * L**3)
    return total


def line_form_direct(q: LineDensity, k: int = 2000) -> float:
    """O(k^2) midpoint double sum on [first node, last node] (test oracle, no tails)."""
    x = np.linspace(q.nodes[0], q.nodes[-1], k + 1)
    mid = 0.5 * (x[:-1] + x[1:])
    h = x[1] - x[0]
    f = q(mid)
    # exact self-cell term: int int_cell |u - v| = h^3 / 3
    D = np.abs(mid[:, None] - mid[None, :])
    np.fill_diagonal(D, h / 3.0)
    return float(h * h * f @ D @ f)


def line_integral_23(q: LineDensity) -> float:
    body = _pl_power_integral(q.values[:-1], q.values[1:], np.diff(q.nodes))
    for c, L in ((q.tail_left, abs(q.nodes[0])), (q.tail_right, abs(q.nodes[-1]))):
        if c:
            body += c ** (2.0 / 3.0) / L
    return body


def line_bound(q: LineDensity) -> float:
    """(2/pi^2) (int q^(2/3))^3."""
    return 2.0 * line_integral_23(q) ** 3 / math.pi**2


def line_check(q: LineDensity) -> BusemannReport:
    form = line_form(q)
    bound = line_bound(q)
    slack = form - bound
    return BusemannReport(form, bound, slack, slack / form if form > 0 else 0.0,
                          1e-13 * max(abs(form), abs(bound)), q.nodes.size)


@dataclass
class TransferReport:
    line: LineDensity
    circle_form: float
    line_form: float
    circle_23: float
    line_23: float
    tail_mass: float

    @property
    def form_gap(self) -> float:
        return abs(self.circle_form - 4.0 * self.line_form)

    @property
    def integral_gap(self) -> float:
        return abs(self.circle_23 - 2.0 * self.line_23)


def tangent_transfer(f: CircleDensity, L: float = 1e3, grid: int = 1 << 16,
                     tail_tol: float = 1e-6, check_periodic: bool = True) -> LineDensity:
    """q(u) = f(arctan u) / (1 + u^2)^(3/2) on [-L, L] with u^-3 tails beyond.

    Nodes are u = sinh(s) for s uniform, so the spacing is about ds near the
    origin and about u ds far out.  (A tan-spaced grid leaves relative
    spacing L dtheta at the ends, which costs accuracy in the 2/3-integral.)
    The tail coefficient c is read off q(+-L) L^3; if it disagrees with the one at +-L/2 by more
    than ``tail_tol`` (relative to the 2/3-integral) the tail is not yet in
    its u^-3 regime and the transfer is rejected.
    """
    if check_periodic and not is_pi_periodic(f, 1e-9):
        raise BusemannError("tangent transfer needs a pi-periodic density")
    u = np.sinh(np.linspace(-math.asinh(L), math.asinh(L), grid + 1))
    u[0], u[-1] = -L, L
    vals = np.asarray(f(np.arctan(u)), dtype=float) / (1.0 + u * u) ** 1.5
    cl = float(vals[0]) * L**3
    cr = float(vals[-1]) * L**3
    q = LineDensity(u, vals, cl, cr)
    half = np.array([-L / 2.0, L / 2.0])
    c_half = np.asarray(f(np.arctan(half)), dtype=float) / (1.0 + half * half) ** 1.5 * (L / 2.0) ** 3
    shape_err = sum(abs(c ** (2.0 / 3.0) - ch ** (2.0 / 3.0)) for c, ch in zip((cl, cr), c_half)) / L
    total23 = line_integral_23(q)
    if shape_err > tail_tol * max(total23, 1e-300):
        raise BusemannError("density tail is not yet ~u^-3 at the truncation; increase L")
    return q


def transfer_report(f: CircleDensity, L: float = 1e3, grid: int = 1 << 16, circle_grid: int = 4096) -> TransferReport:
    q = tangent_transfer(f, L, grid)
    tail_mass = LineDensity._tail_mass(q.tail_left, L) + LineDensity._tail_mass(q.tail_right, L)
    return TransferReport(q, circle_form(f, circle_grid), line_form(q), integral_23(f), line_integral_23(q), tail_mass)


# ---------------------------------------------------------------------------
# parsing and random families


def parse_circle_density(text: str) -> CircleDensity:
    """``const:c``, ``trig:a0,a1,b1,...``, ``ellipse:p,q`` or ``grid:<file>``."""
    kind, _, body = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "const":
            return constant_circle(float(body))
        if kind == "trig":
            return TrigDensity(tuple(float(s) for s in body.split(",")))
        if kind == "ellipse":
            p, q = (float(s) for s in body.split(","))
            return EllipseDensity(p, q)
        if kind == "grid":
            vals = [float(line) for line in Path(body).read_text().split() if line.strip()]
            return GridCircleDensity(np.array(vals))
    except (ValueError, OSError) as exc:
        raise BusemannError(f"malformed circle density {text!r}: {exc}") from exc
    raise BusemannError(f"unknown circle density kind {kind!r}")


def random_trig_density(rng: np.random.Generator, degree: int | None = None) -> TrigDensity:
    """Random trig polynomial, often negative somewhere so that clipping is exercised."""
    d = int(rng.integers(1, 7)) if degree is None else degree
    coeffs = [float(rng.uniform(0.0, 2.0))]
    for k in range(1, d + 1):
        coeffs += list(rng.normal(0.0, 1.0 / k, 2))
    return TrigDensity(tuple(coeffs))


def random_line_density(rng: np.random.Generator, k: int | None = None) -> LineDensity:
    k = int(rng.integers(4, 400)) if k is None else k
    lo = float(rng.uniform(-5.0, 0.0))
    hi = lo + float(rng.uniform(0.1, 10.0))
    vals = rng.random(k) ** rng.uniform(0.2, 4.0)
    vals[rng.random(k) < rng.uniform(0, 0.5)] = 0.0
    return LineDensity.on_interval(lo, hi, vals)
