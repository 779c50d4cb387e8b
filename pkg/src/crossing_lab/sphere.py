"""Geometry on the unit sphere: distances, frames, arcs and sampling.

Points are plain numpy arrays of shape ``(3,)`` or ``(..., 3)``; most
functions broadcast over leading axes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
UNIT_TOL = 1e-12


class Sphere:
    """Marker for the spherical ambient space."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "SPHERE"

    def __reduce__(self):
        return (Sphere, ())


SPHERE = Sphere()


def is_sphere(ambient) -> bool:
    return isinstance(ambient, Sphere)


class Crossing(enum.Enum):
    NO_CROSS = 0
    CROSS = 1
    DEGENERATE = 2


_REASONS = {
    _kernels.DEG_COCIRCULAR: "cocircular supports",
    _kernels.DEG_TOUCH: "intersection at an endpoint",
    _kernels.DEG_SHARED: "shared endpoint",
}


@dataclass(frozen=True)
class CrossResult:
    status: Crossing
    reason: str | None = None

    @property
    def crosses(self) -> bool:
        return self.status is Crossing.CROSS

    @property
    def degenerate(self) -> bool:
        return self.status is Crossing.DEGENERATE

    @classmethod
    def from_code(cls, code: int) -> "CrossResult":
        if code == _kernels.CROSS:
            return CROSS
        if code == _kernels.NO_CROSS:
            return NO_CROSS
        return cls(Crossing.DEGENERATE, _REASONS[int(code)])


CROSS = CrossResult(Crossing.CROSS)
NO_CROSS = CrossResult(Crossing.NO_CROSS)


def unit_vector(v) -> np.ndarray:
    """Normalise ``v`` along its last axis."""
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise ValueError("cannot normalise the zero vector")
    return v / norm


def from_lonlat(lon, lat) -> np.ndarray:
    """Unit vector(s) from longitude/latitude in radians."""
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    return np.stack([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)], axis=-1)


def spherical_distance(a, b) -> np.ndarray | float:
    """Great-circle distance, via atan2 so it stays accurate near 0 and pi."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cr = np.linalg.norm(np.cross(a, b), axis=-1)
    dot = np.sum(a * b, axis=-1)
    d = np.arctan2(cr, dot)
    return float(d) if np.ndim(d) == 0 else d


@dataclass(frozen=True)
class TangentFrame:
    base: np.ndarray
    e1: np.ndarray
    e2: np.ndarray

    def direction(self, theta) -> np.ndarray:
        """Unit tangent cos(theta) e1 + sin(theta) e2."""
        theta = np.asarray(theta, dtype=float)
        c = np.cos(theta)[..., None]
        s = np.sin(theta)[..., None]
        return c * self.e1 + s * self.e2


def tangent_frame(x) -> TangentFrame:
    """Deterministic orthonormal tangent frame at ``x``.

    e1 = normalize(k x x) with k the z axis, falling back to the x axis
    when x is within 1e-6 of the poles; e2 = x cross e1.
    """
    x = np.asarray(x, dtype=float)
    k = np.zeros_like(x)
    k[..., 2] = 1.0
    c = np.cross(k, x)
    near_pole = np.linalg.norm(c, axis=-1) <= 1e-6
    if np.any(near_pole):
        kk = np.zeros_like(x)
        kk[..., 0] = 1.0
        c = np.where(near_pole[..., None], np.cross(kk, x), c)
    e1 = c / np.linalg.norm(c, axis=-1, keepdims=True)
    e2 = np.cross(x, e1)
    return TangentFrame(x, e1, e2)


def exp_map(x, v, s) -> np.ndarray:
    """Point at distance ``s`` from ``x`` along the unit tangent ``v``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    s = np.asarray(s, dtype=float)[..., None]
    return np.cos(s) * x + np.sin(s) * v


@dataclass(frozen=True)
class GeodesicArc:
    """Shorter great-circle arc from ``a`` to ``b``."""

    a: np.ndarray
    b: np.ndarray
    normal: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.shape != (3,) or b.shape != (3,):
            raise ValueError("arc endpoints must be 3-vectors")
        for p in (a, b):
            if abs(np.linalg.norm(p) - 1.0) > 1e-9:
                raise ValueError("arc endpoints must be unit vectors")
        c = np.cross(a, b)
        nc = np.linalg.norm(c)
        if nc <= 1e-10:
            raise ValueError("arc endpoints are equal or antipodal")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "normal", c / nc)

    @property
    def length(self) -> float:
        return spherical_distance(self.a, self.b)

    @property
    def midpoint(self) -> np.ndarray:
        return unit_vector(self.a + self.b)

    def points(self, k: int) -> np.ndarray:
        """``k`` equally spaced points along the closed arc."""
        s = np.linspace(0.0, self.length, k)
        tangent = np.cross(self.normal, self.a)
        return exp_map(self.a, tangent, s)

    def rotated(self, R) -> "GeodesicArc":
        return GeodesicArc(R @ self.a, R @ self.b)


def arc_cross(A: GeodesicArc, B: GeodesicArc) -> CrossResult:
    """Decide whether the open arcs A and B meet in exactly one interior point."""
    code = _kernels.arc_code_n(A.a, A.b, A.normal, B.a, B.b, B.normal)
    return CrossResult.from_code(code)


def arc_cross_codes(a1, b1, a2, b2) -> np.ndarray:
    """Batch predicate on endpoint arrays of shape (k, 3); returns int8 codes."""
    return _kernels.arc_codes(
        np.ascontiguousarray(a1, dtype=float),
        np.ascontiguousarray(b1, dtype=float),
        np.ascontiguousarray(a2, dtype=float),
        np.ascontiguousarray(b2, dtype=float),
    )


def point_to_arc_distance(x, A: GeodesicArc) -> float:
    """Distance from ``x`` to the closed arc ``A``."""
    x = np.asarray(x, dtype=float)
    n = A.normal
    foot = x - np.dot(x, n) * n
    fn = np.linalg.norm(foot)
    if fn > 1e-15:
        foot = foot / fn
        # the foot lies on the arc iff it sits between a and b on the circle
        if np.dot(np.cross(A.a, foot), n) >= 0 and np.dot(np.cross(foot, A.b), n) >= 0:
            return abs(math.asin(min(1.0, max(-1.0, float(np.dot(x, n))))))
    return min(spherical_distance(x, A.a), spherical_distance(x, A.b))


def sample_uniform_sphere(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform points on the sphere from normalised Gaussian triples."""
    k = 1 if size is None else size
    v = rng.standard_normal((k, 3))
    norm = np.linalg.norm(v, axis=1)
    bad = norm < 1e-8
    while np.any(bad):
        v[bad] = rng.standard_normal((int(bad.sum()), 3))
        norm = np.linalg.norm(v, axis=1)
        bad = norm < 1e-8
    v /= norm[:, None]
    return v[0] if size is None else v


def fibonacci_sphere(n: int) -> np.ndarray:
    """Fibonacci lattice: equally spaced heights, golden-angle longitudes."""
    if n < 1:
        raise ValueError("n must be positive")
    i = np.arange(n, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    lon = 2.0 * math.pi * i / GOLDEN**2
    return np.stack([r * np.cos(lon), r * np.sin(lon), z], axis=1)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed rotation matrix (QR of a Gaussian matrix)."""
    m = rng.standard_normal((3, 3))
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def cap_mass(points, center, radius: float) -> float:
    """Fraction of ``points`` within spherical distance ``radius`` of ``center``."""
    d = spherical_distance(points, np.asarray(center, dtype=float))
    return float(np.mean(d <= radius))
