"""Convex planar domains, uniform sampling and straight-segment crossings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .sphere import CrossResult

CONVEX_TOL = 1e-12


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Segment2:
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if p.shape != (2,) or q.shape != (2,):
            raise ValueError("segment endpoints must be 2-vectors")
        if np.linalg.norm(p - q) <= 1e-12:
            raise ValueError("segment endpoints coincide")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)


def segment_cross(S1: Segment2, S2: Segment2) -> CrossResult:
    """Decide whether the open segments meet in exactly one point."""
    return CrossResult.from_code(_kernels.seg_code(S1.p, S1.q, S2.p, S2.q))


def segment_cross_codes(p1, q1, p2, q2) -> np.ndarray:
    return _kernels.seg_codes(
        np.ascontiguousarray(p1, dtype=float),
        np.ascontiguousarray(q1, dtype=float),
        np.ascontiguousarray(p2, dtype=float),
        np.ascontiguousarray(q2, dtype=float),
    )


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("disk radius must be positive")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains(self, p, slack: float = 1e-12) -> np.ndarray | bool:
        p = np.asarray(p, dtype=float)
        d = np.hypot(p[..., 0] - self.center[0], p[..., 1] - self.center[1])
        return d <= self.radius * (1.0 + slack) + slack

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        r = self.radius * np.sqrt(rng.random(size))
        phi = 2.0 * math.pi * rng.random(size)
        return np.stack([self.center[0] + r * np.cos(phi), self.center[1] + r * np.sin(phi)], axis=1)

    def chord_exit(self, x, theta) -> float:
        x = np.asarray(x, dtype=float)
        if not self.contains(x):
            raise DomainError("point lies outside the domain")
        v = np.array([math.cos(theta), math.sin(theta)])
        d = x - np.asarray(self.center)
        # |d + s v| = R, s >= 0
        b = float(np.dot(d, v))
        c = float(np.dot(d, d)) - self.radius**2
        disc = max(0.0, b * b - c)
        return max(0.0, -b + math.sqrt(disc))

    def spec(self) -> dict:
        return {"disk": [self.center[0], self.center[1], self.radius]}


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex polygon; vertices are stored counterclockwise."""

    vertices: np.ndarray
    _tri_cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise DomainError("a polygon needs at least 3 vertices")
        if _signed_area(v) < 0:
            v = v[::-1].copy()
        e = np.roll(v, -1, axis=0) - v
        turn = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        scale = max(1.0, float(np.max(np.abs(v))))
        if np.any(turn < -CONVEX_TOL * scale**2):
            raise DomainError("polygon is not convex")
        if _signed_area(v) <= 0:
            raise DomainError("polygon has zero area")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        tri = np.array([abs(_tri_area(v[0], v[i], v[i + 1])) for i in range(1, len(v) - 1)])
        object.__setattr__(self, "_tri_cdf", np.cumsum(tri) / tri.sum())

    def __eq__(self, other):
        return isinstance(other, ConvexPolygon) and np.array_equal(self.vertices, other.vertices)

    def __hash__(self):
        return hash(self.vertices.tobytes())

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=-1)))

    def contains(self, p, slack: float = 1e-12) -> np.ndarray | bool:
        p = np.asarray(p, dtype=float)
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        rel = p[..., None, :] - v
        cr = e[:, 0] * rel[..., 1] - e[:, 1] * rel[..., 0]
        tol = slack * max(1.0, self.diameter) ** 2
        return np.all(cr >= -tol, axis=-1)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        # fan triangulation from vertex 0, area-weighted choice, barycentric draw
        v = self.vertices
        k = np.searchsorted(self._tri_cdf, rng.random(size), side="right")
        k = np.minimum(k, len(self._tri_cdf) - 1)
        u = rng.random(size)
        w = rng.random(size)
        flip = u + w > 1.0
        u = np.where(flip, 1.0 - u, u)
        w = np.where(flip, 1.0 - w, w)
        a = v[0]
        b = v[k + 1]
        c = v[k + 2]
        return a + u[:, None] * (b - a) + w[:, None] * (c - a)

    def chord_exit(self, x, theta) -> float:
        x = np.asarray(x, dtype=float)
        if not self.contains(x):
            raise DomainError("point lies outside the domain")
        d = np.array([math.cos(theta), math.sin(theta)])
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        # inward normal of an edge (ccw) is (-ey, ex); distance to its line
        nrm = np.stack([-e[:, 1], e[:, 0]], axis=1)
        dist = np.einsum("ij,ij->i", x - v, nrm)
        speed = nrm @ d
        best = math.inf
        for di, si in zip(dist, speed):
            if si < 0:
                best = min(best, -di / si)
        return max(0.0, best)

    def spec(self) -> dict:
        return {"poly": self.vertices.tolist()}


ConvexDomain = Disk | ConvexPolygon


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _tri_area(a, b, c) -> float:
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def area(domain: ConvexDomain) -> float:
    return domain.area


def unit_square() -> ConvexPolygon:
    return ConvexPolygon(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))


def sample_uniform_domain(domain: ConvexDomain, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    pts = domain.sample(rng, 1 if size is None else size)
    return pts[0] if size is None else pts


def chord_exit(domain: ConvexDomain, x, theta: float) -> float:
    """Distance from interior ``x`` to the boundary along direction ``theta``."""
    return domain.chord_exit(x, theta)


@dataclass(frozen=True)
class AffineMap:
    """x -> M x + shift with invertible M."""

    matrix: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float).reshape(2, 2)
        if abs(np.linalg.det(M)) <= 1e-12:
            raise ValueError("affine map is singular")
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "shift", np.asarray(self.shift, dtype=float).reshape(2))

    def __call__(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return p @ self.matrix.T + self.shift

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


def affine_map(domain: ConvexDomain, T: AffineMap) -> ConvexPolygon | Disk:
    """Image of the domain; disks stay disks only under similarities."""
    if isinstance(domain, ConvexPolygon):
        return ConvexPolygon(T(domain.vertices))
    M = T.matrix
    sv = np.linalg.svd(M, compute_uv=False)
    if abs(sv[0] - sv[1]) > 1e-12 * sv[0]:
        raise DomainError("a non-similarity maps a disk to an ellipse, which is not supported")
    c = T(np.asarray(domain.center))
    return Disk((c[0], c[1]), domain.radius * sv[0])


def transform_segment(S: Segment2, T: AffineMap) -> Segment2:
    return Segment2(T(S.p), T(S.q))


def parse_domain(text: str) -> ConvexDomain:
    """Parse ``disk:cx,cy,r`` or ``poly:x1,y1;x2,y2;...``."""
    kind, _, body = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "disk":
            cx, cy, r = (float(s) for s in body.split(","))
            return Disk((cx, cy), r)
        if kind == "poly":
            pts = [[float(s) for s in pair.split(",")] for pair in body.split(";") if pair.strip()]
            return ConvexPolygon(np.array(pts))
    except (ValueError, TypeError) as exc:
        raise DomainError(f"malformed domain {text!r}: {exc}") from exc
    raise DomainError(f"unknown domain kind {kind!r}")


def domain_from_spec(spec) -> ConvexDomain:
    """Inverse of ``domain.spec()`` (the drawing-file representation)."""
    if "disk" in spec:
        cx, cy, r = spec["disk"]
        return Disk((cx, cy), r)
    if "poly" in spec:
        return ConvexPolygon(np.asarray(spec["poly"], dtype=float))
    raise DomainError(f"unknown ambient {spec!r}")
