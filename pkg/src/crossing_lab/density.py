"""Symmetric edge densities w(x, y) on the sphere or on a convex domain.

Every density exposes ``evaluate(x, y)`` on arrays of points of shape
``(k, d)`` and returns ``k`` values.  Implementations are symmetric by
construction: swapping the arguments gives bit-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sp_integrate
from scipy.spatial import cKDTree

from . import _kernels
from .drawing import Drawing, load_drawing
from .planar import ConvexDomain
from .sphere import SPHERE, exp_map, fibonacci_sphere, is_sphere, spherical_distance, tangent_frame


class DensityError(ValueError):
    pass


def _pair_arrays(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("x and y must have the same shape")
    return x, y


@dataclass(frozen=True)
class ThresholdDensity:
    """w(x, y) = 1{d(x, y) <= t}; on a domain the distance is Euclidean and
    w vanishes when either point leaves the domain."""

    ambient: object
    t: float

    def evaluate(self, x, y) -> np.ndarray:
        x, y = _pair_arrays(x, y)
        if is_sphere(self.ambient):
            return (spherical_distance(x, y) <= self.t).astype(float)
        d = np.linalg.norm(x - y, axis=-1)
        inside = self.ambient.contains(x) & self.ambient.contains(y)
        return ((d <= self.t) & inside).astype(float)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.t,)

    @property
    def support_radius(self) -> float:
        return self.t

    def closed_form_density(self) -> float | None:
        if is_sphere(self.ambient):
            return (1.0 - math.cos(self.t)) / 2.0
        return None

    def label(self) -> str:
        return f"threshold:{self.t!r}"


@dataclass(frozen=True)
class BandDensity:
    """w(x, y) = 1{t1 < d(x, y) <= t2} on the sphere (band(0, t) = threshold(t))."""

    t1: float
    t2: float
    ambient: object = SPHERE

    def evaluate(self, x, y) -> np.ndarray:
        x, y = _pair_arrays(x, y)
        d = spherical_distance(x, y)
        lower = d > self.t1 if self.t1 > 0 else np.ones(np.shape(d), dtype=bool)
        return (lower & (d <= self.t2)).astype(float)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(b for b in (self.t1, self.t2) if b > 0)

    @property
    def support_radius(self) -> float:
        return self.t2

    def closed_form_density(self) -> float:
        return (math.cos(self.t1) - math.cos(self.t2)) / 2.0

    def label(self) -> str:
        return f"band:{self.t1!r},{self.t2!r}"


@dataclass(frozen=True)
class ConstantDensity:
    ambient: object
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DensityError("constant density must lie in [0, 1]")

    def evaluate(self, x, y) -> np.ndarray:
        x, y = _pair_arrays(x, y)
        out = np.full(x.shape[:-1], self.p)
        if not is_sphere(self.ambient):
            out = np.where(self.ambient.contains(x) & self.ambient.contains(y), out, 0.0)
        return out

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return ()

    @property
    def support_radius(self) -> None:
        return None

    def closed_form_density(self) -> float | None:
        return self.p

    def label(self) -> str:
        return f"const:{self.p!r}"


@dataclass(frozen=True)
class RadialKernel:
    """Normalised C-infinity bump K(x, y) = k(d(x, y)) / Z supported in d < delta.

    Z is fixed so that the integral of K(x, .) against the normalised area
    measure equals one.
    """

    delta: float
    norm: float = field(init=False)
    lipschitz: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.delta <= 0.2:
            raise DensityError("kernel radius delta must lie in (0, 0.2]")
        z, _ = sp_integrate.quad(lambda r: self.profile(r) * math.sin(r), 0.0, self.delta,
                                 epsabs=0.0, epsrel=1e-13, limit=200)
        object.__setattr__(self, "norm", 0.5 * z)
        r = np.linspace(0.0, self.delta, 20001)
        slope = np.max(np.abs(np.diff(self.profile(r)))) / (r[1] - r[0])
        object.__setattr__(self, "lipschitz", 1.05 * slope / self.norm)

    def profile(self, r):
        """Unnormalised bump k(r) = exp(-1 / (1 - (r/delta)^2)) for r < delta."""
        r = np.asarray(r, dtype=float)
        u = np.minimum(np.abs(r) / self.delta, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            val = np.exp(-1.0 / (1.0 - u * u))
        return np.where(u < 1.0, val, 0.0)

    def __call__(self, r):
        return self.profile(r) / self.norm

    @property
    def peak(self) -> float:
        return math.exp(-1.0) / self.norm

    def sample_around(self, centers: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw y ~ K(c, y) dmu(y) for every row c of ``centers``."""
        centers = np.asarray(centers, dtype=float)
        k = centers.shape[0]
        r = np.empty(k)
        todo = np.arange(k)
        cmin = math.cos(self.delta)
        while todo.size:
            # cap-uniform proposal has radial density proportional to sin r
            cr = cmin + (1.0 - cmin) * rng.random(todo.size)
            prop = np.arccos(np.clip(cr, -1.0, 1.0))
            ok = rng.random(todo.size) * math.exp(-1.0) < self.profile(prop)
            r[todo[ok]] = prop[ok]
            todo = todo[~ok]
        frame = tangent_frame(centers)
        v = frame.direction(rng.uniform(0.0, 2.0 * math.pi, k))
        out = exp_map(centers, v, r)
        return out / np.linalg.norm(out, axis=1, keepdims=True)


def _csr_neighbors(tree: cKDTree, points: np.ndarray, queries: np.ndarray, kernel: RadialKernel):
    """For every query, the vertex ids within the kernel radius (sorted) and kernel weights."""
    chord = 2.0 * math.sin(kernel.delta / 2.0)
    lists = tree.query_ball_point(queries, chord)
    ptr = np.zeros(len(queries) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(lst) for lst in lists])
    idx = np.empty(ptr[-1], dtype=np.int64)
    for i, lst in enumerate(lists):
        idx[ptr[i]:ptr[i + 1]] = np.sort(lst)
    owner = np.repeat(np.arange(len(queries)), np.diff(ptr))
    d = spherical_distance(queries[owner], points[idx]) if idx.size else np.zeros(0)
    val = kernel(d) if idx.size else np.zeros(0)
    return ptr, idx, np.asarray(val, dtype=float)


@dataclass
class SmoothedDensity:
    """w(x, y) = n^-2 sum over oriented edges (u, v) of K(x, p_u) K(y, p_v)."""

    drawing: Drawing
    kernel: RadialKernel
    ambient: object = SPHERE
    _tree: cKDTree = field(init=False, repr=False)
    _adj_ptr: np.ndarray = field(init=False, repr=False)
    _adj_idx: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.drawing.sphere:
            raise DensityError("kernel smoothing is implemented for spherical drawings")
        n = self.drawing.n
        self._tree = cKDTree(self.drawing.vertices)
        e = self.drawing.edges
        both = np.concatenate([e, e[:, ::-1]]) if e.size else np.zeros((0, 2), dtype=np.int64)
        both = both[np.lexsort((both[:, 1], both[:, 0]))] if both.size else both
        self._adj_ptr = np.zeros(n + 1, dtype=np.int64)
        if both.size:
            self._adj_ptr[1:] = np.cumsum(np.bincount(both[:, 0], minlength=n))
        self._adj_idx = np.ascontiguousarray(both[:, 1]) if both.size else np.zeros(0, dtype=np.int64)

    @property
    def delta(self) -> float:
        return self.kernel.delta

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return ()

    @property
    def support_radius(self) -> None:
        return None

    def closed_form_density(self) -> float:
        return 2.0 * self.drawing.m / self.drawing.n**2

    def evaluate(self, x, y) -> np.ndarray:
        x, y = _pair_arrays(x, y)
        shape = x.shape[:-1]
        x = x.reshape(-1, 3)
        y = y.reshape(-1, 3)
        k = x.shape[0]
        if k == 0 or self.drawing.m == 0:
            return np.zeros(shape)
        q = np.concatenate([x, y])
        ptr, idx, val = _csr_neighbors(self._tree, self.drawing.vertices, q, self.kernel)
        out = _kernels.smoothed_pair_values(ptr, idx, val, np.arange(k), np.arange(k, 2 * k),
                                            self._adj_ptr, self._adj_idx, self.drawing.n)
        return out.reshape(shape)

    def rho(self, x) -> np.ndarray:
        """Vertex density rho(x) = n^-1 sum_v K(x, p_v)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        ptr, idx, val = _csr_neighbors(self._tree, self.drawing.vertices, x, self.kernel)
        owner = np.repeat(np.arange(len(x)), np.diff(ptr))
        return np.bincount(owner, weights=val, minlength=len(x)) / self.drawing.n

    def sample_edge_endpoints(self, k: int, rng: np.random.Generator):
        """Endpoints (x1, x2) drawn from the normalised measure w dmu dmu."""
        e = self.drawing.edges[rng.integers(0, self.drawing.m, k)]
        flip = rng.random(k) < 0.5
        a = np.where(flip, e[:, 1], e[:, 0])
        b = np.where(flip, e[:, 0], e[:, 1])
        P = self.drawing.vertices
        return self.kernel.sample_around(P[a], rng), self.kernel.sample_around(P[b], rng)

    def label(self) -> str:
        return f"smoothed:{self.drawing.meta.get('source', '<drawing>')},{self.delta!r}"


@dataclass(frozen=True)
class ScaledDensity:
    """c * w for a base density w."""

    base: object
    factor: float

    @property
    def ambient(self):
        return self.base.ambient

    def evaluate(self, x, y) -> np.ndarray:
        return self.factor * self.base.evaluate(x, y)

    @property
    def breakpoints(self):
        return self.base.breakpoints

    @property
    def support_radius(self):
        return self.base.support_radius

    def closed_form_density(self):
        e = self.base.closed_form_density()
        return None if e is None else self.factor * e

    def label(self) -> str:
        return f"scaled:{self.factor!r}*{self.base.label()}"


@dataclass
class SmoothedPair:
    """Kernel-smoothed vertex density rho, edge density w and the deviation eta."""

    w: SmoothedDensity
    eta: float
    rho_deviation: float
    mesh_slack: float

    def rho(self, x) -> np.ndarray:
        return self.w.rho(x)


def threshold_density_sphere(t: float) -> ThresholdDensity:
    if not 0.0 < t <= math.pi:
        raise DensityError("threshold t must lie in (0, pi]")
    return ThresholdDensity(SPHERE, float(t))


def threshold_for_density(e: float) -> float:
    if not 0.0 <= e <= 1.0:
        raise DensityError("edge density must lie in [0, 1]")
    return math.acos(1.0 - 2.0 * e)


def band_density_sphere(t1: float, t2: float) -> BandDensity:
    if not 0.0 <= t1 < t2 <= math.pi:
        raise DensityError("band needs 0 <= t1 < t2 <= pi")
    return BandDensity(float(t1), float(t2))


def threshold_density_planar(r: float, domain: ConvexDomain) -> ThresholdDensity:
    if not r > 0:
        raise DensityError("planar threshold r must be positive")
    return ThresholdDensity(domain, float(r))


def constant_density(p: float, ambient=SPHERE) -> ConstantDensity:
    return ConstantDensity(ambient, float(p))


def smoothed_from_drawing(D: Drawing, delta: float, grid: int = 100_000) -> SmoothedPair:
    """Kernel smoothing of a spherical drawing together with its eta estimate.

    eta bounds ||rho - 1||_inf by the maximum over a Fibonacci grid plus the
    Lipschitz constant of rho times the grid spacing.
    """
    kernel = RadialKernel(float(delta))
    w = SmoothedDensity(D, kernel)
    pts = fibonacci_sphere(grid)
    tree = cKDTree(pts)
    chord = 2.0 * math.sin(kernel.delta / 2.0)
    sdm = tree.sparse_distance_matrix(w._tree, chord, output_type="coo_matrix")
    if sdm.nnz:
        # convert chord to arc length before applying the kernel
        arc = 2.0 * np.arcsin(np.minimum(sdm.data / 2.0, 1.0))
        rho = np.bincount(sdm.row, weights=kernel(arc), minlength=grid) / D.n
    else:
        rho = np.zeros(grid)
    dev = float(np.max(np.abs(rho - 1.0)))
    slack = kernel.lipschitz * math.sqrt(4.0 * math.pi / grid)
    return SmoothedPair(w, dev + slack, dev, slack)


def rescale_near_uniform(sp: SmoothedPair | object, eta: float | None = None) -> ScaledDensity:
    """w / (1 + eta)^2, an admissible density when w <= rho x rho and |rho - 1| <= eta."""
    if isinstance(sp, SmoothedPair):
        base, eta = sp.w, sp.eta if eta is None else eta
    else:
        base = sp
        if eta is None:
            raise DensityError("eta is required for a bare density")
    if eta < 0:
        raise DensityError("eta must be nonnegative")
    return ScaledDensity(base, 1.0 / (1.0 + eta) ** 2)


def _floats(body: str, k: int | None = None) -> list[float]:
    try:
        vals = [float(s) for s in body.split(",")]
    except ValueError as exc:
        raise DensityError(f"malformed numbers {body!r}") from exc
    if k is not None and len(vals) != k:
        raise DensityError(f"expected {k} numbers, got {body!r}")
    return vals


def parse_density(text: str, ambient=SPHERE):
    """Parse ``threshold:t``, ``band:t1,t2``, ``const:p`` or ``smoothed:<file>,delta``.

    On a planar domain ``threshold:r`` is the Euclidean threshold.
    """
    kind, _, body = text.partition(":")
    kind = kind.strip().lower()
    if kind == "threshold":
        (t,) = _floats(body, 1)
        if is_sphere(ambient):
            return threshold_density_sphere(t)
        return threshold_density_planar(t, ambient)
    if kind == "band":
        if not is_sphere(ambient):
            raise DensityError("band densities are spherical")
        t1, t2 = _floats(body, 2)
        return band_density_sphere(t1, t2)
    if kind == "const":
        (p,) = _floats(body, 1)
        return constant_density(p, ambient)
    if kind == "smoothed":
        path, _, delta = body.rpartition(",")
        if not path:
            raise DensityError("smoothed density needs <file>,delta")
        D = load_drawing(path)
        D.meta.setdefault("source", path)
        return smoothed_from_drawing(D, _floats(delta, 1)[0]).w
    raise DensityError(f"unknown density kind {kind!r}")


__all__ = [
    "DensityError", "ThresholdDensity", "BandDensity", "ConstantDensity", "RadialKernel",
    "SmoothedDensity", "SmoothedPair", "ScaledDensity", "threshold_density_sphere",
    "threshold_for_density", "band_density_sphere", "threshold_density_planar",
    "constant_density", "smoothed_from_drawing", "rescale_near_uniform", "parse_density",
]
