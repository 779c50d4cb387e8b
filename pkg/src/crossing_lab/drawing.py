"""Finite geodesic / straight-line drawings and their generators."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .planar import ConvexDomain, ConvexPolygon, Disk, domain_from_spec
from .sphere import SPHERE, Sphere, fibonacci_sphere, is_sphere, sample_uniform_sphere, spherical_distance


class DrawingError(ValueError):
    pass


@dataclass
class Drawing:
    ambient: object
    vertices: np.ndarray
    edges: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.edges = np.ascontiguousarray(edges)
        self.validate()

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    @property
    def m(self) -> int:
        return self.edges.shape[0]

    @property
    def sphere(self) -> bool:
        return is_sphere(self.ambient)

    def validate(self):
        dim = 3 if self.sphere else 2
        if self.vertices.ndim != 2 or self.vertices.shape[1] != dim:
            raise DrawingError(f"vertices must have shape (n, {dim})")
        if self.sphere:
            dev = np.abs(np.linalg.norm(self.vertices, axis=1) - 1.0)
            if dev.size and dev.max() > 1e-9:
                raise DrawingError("vertex is not a unit vector")
        if self.n >= 2:
            d, _ = cKDTree(self.vertices).query(self.vertices, k=2)
            if np.any(d[:, 1] <= 0.0):
                raise DrawingError("vertex positions are not distinct")
        e = self.edges
        if e.size:
            if e.min() < 0 or e.max() >= self.n:
                raise DrawingError("edge index out of range")
            if np.any(e[:, 0] >= e[:, 1]):
                raise DrawingError("edges must satisfy i < j")
            key = e[:, 0] * self.n + e[:, 1]
            if np.any(np.diff(key) <= 0):
                raise DrawingError("edges must be sorted and unique")
            if self.sphere:
                a = self.vertices[e[:, 0]]
                b = self.vertices[e[:, 1]]
                if np.any(np.linalg.norm(np.cross(a, b), axis=1) <= 1e-10):
                    raise DrawingError("edge joins antipodal (or equal) points")

    def with_vertices(self, vertices) -> "Drawing":
        return Drawing(self.ambient, vertices, self.edges.copy(), dict(self.meta))


def normalize_edges(edges, n: int) -> np.ndarray:
    """Orient every edge as i < j, then sort and drop duplicates."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    e = np.sort(e, axis=1)
    if e.size == 0:
        return e
    key = np.unique(e[:, 0] * n + e[:, 1])
    return np.stack([key // n, key % n], axis=1)


def sphere_neighbor_pairs(points: np.ndarray, t: float) -> np.ndarray:
    """All pairs i < j with spherical distance <= t."""
    if len(points) < 2:
        return np.zeros((0, 2), dtype=np.int64)
    chord = 2.0 * math.sin(min(t, math.pi) / 2.0)
    pairs = cKDTree(points).query_pairs(chord * (1.0 + 1e-9) + 1e-12, output_type="ndarray")
    if len(pairs) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    d = spherical_distance(points[pairs[:, 0]], points[pairs[:, 1]])
    return normalize_edges(pairs[d <= t], len(points))


def planar_neighbor_pairs(points: np.ndarray, r: float) -> np.ndarray:
    if len(points) < 2 or r <= 0:
        return np.zeros((0, 2), dtype=np.int64)
    pairs = cKDTree(points).query_pairs(r * (1.0 + 1e-9), output_type="ndarray")
    if len(pairs) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    d = np.linalg.norm(points[pairs[:, 0]] - points[pairs[:, 1]], axis=1)
    return normalize_edges(pairs[d <= r], len(points))


def generate_sphere_threshold(n: int, t: float, sampler: str = "fibonacci", seed: int = 0) -> Drawing:
    """Vertices from the sampler; an edge for every pair within distance t."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0 < t <= math.pi:
        raise ValueError("t must lie in (0, pi]")
    if sampler == "fibonacci":
        pts = fibonacci_sphere(n)
    elif sampler == "random":
        pts = sample_uniform_sphere(np.random.default_rng(seed), n)
    else:
        raise ValueError(f"unknown sampler {sampler!r}")
    edges = sphere_neighbor_pairs(pts, t)
    if len(edges):
        a, b = pts[edges[:, 0]], pts[edges[:, 1]]
        edges = edges[np.linalg.norm(np.cross(a, b), axis=1) > 1e-10]
    meta = {"generator": "sphere_threshold", "sampler": sampler, "seed": seed, "t": t}
    return Drawing(SPHERE, pts, edges, meta)


def perturbed_grid(domain: ConvexDomain, n: int, jitter: float, rng: np.random.Generator) -> np.ndarray:
    """About n points of a jittered square grid clipped to the domain."""
    if isinstance(domain, Disk):
        cx, cy = domain.center
        lo = np.array([cx - domain.radius, cy - domain.radius])
        hi = np.array([cx + domain.radius, cy + domain.radius])
    else:
        lo = domain.vertices.min(axis=0)
        hi = domain.vertices.max(axis=0)
    h = math.sqrt(domain.area / n)
    kx = max(1, int(math.ceil((hi[0] - lo[0]) / h)))
    ky = max(1, int(math.ceil((hi[1] - lo[1]) / h)))
    gx, gy = np.meshgrid(lo[0] + (np.arange(kx) + 0.5) * (hi[0] - lo[0]) / kx,
                         lo[1] + (np.arange(ky) + 0.5) * (hi[1] - lo[1]) / ky)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    pts = pts + rng.uniform(-jitter, jitter, size=pts.shape)
    return pts[domain.contains(pts)]


def generate_planar_threshold(n: int, r: float, domain: ConvexDomain, seed: int = 0,
                              sampler: str = "random") -> Drawing:
    """Uniform (or jittered-grid) vertices in the domain; edges within distance r."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if r < 0:
        raise ValueError("r must be nonnegative")
    rng = np.random.default_rng(seed)
    if sampler == "random":
        pts = domain.sample(rng, n)
    elif sampler == "grid":
        pts = perturbed_grid(domain, n, r / 10.0 if r > 0 else 0.0, rng)
    else:
        raise ValueError(f"unknown sampler {sampler!r}")
    edges = planar_neighbor_pairs(pts, r)
    meta = {"generator": "planar_threshold", "sampler": sampler, "seed": seed, "r": r}
    return Drawing(domain, pts, edges, meta)


def density_stats(D: Drawing) -> dict:
    n, m = D.n, D.m
    return {
        "n": n,
        "m": m,
        "ordered_density": 2.0 * m / n**2 if n else 0.0,
        "half_density": m / n**2 if n else 0.0,
    }


def _ambient_spec(ambient):
    return "sphere" if is_sphere(ambient) else ambient.spec()


def drawing_to_json(D: Drawing) -> dict:
    return {
        "ambient": _ambient_spec(D.ambient),
        # json writes floats with repr, the shortest string that round-trips
        "vertices": D.vertices.tolist(),
        "edges": D.edges.tolist(),
        "meta": D.meta,
    }


def save_drawing(D: Drawing, path) -> None:
    Path(path).write_text(json.dumps(drawing_to_json(D)))


def drawing_from_json(data: dict, strict: bool = True) -> Drawing:
    try:
        amb = data["ambient"]
        ambient = SPHERE if amb == "sphere" else domain_from_spec(amb)
        vertices = np.asarray(data["vertices"], dtype=float)
        edges = np.asarray(data.get("edges", []), dtype=np.int64).reshape(-1, 2)
        meta = dict(data.get("meta", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise DrawingError(f"malformed drawing file: {exc}") from exc
    if vertices.size == 0:
        vertices = vertices.reshape(0, 3 if ambient is SPHERE else 2)
    if not strict:
        if np.any(edges[:, 0] == edges[:, 1]):
            raise DrawingError("self-loop in drawing file")
        edges = normalize_edges(edges, len(vertices))
    return Drawing(ambient, vertices, edges, meta)


def load_drawing(path, strict: bool = True) -> Drawing:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DrawingError(f"malformed drawing file: {exc}") from exc
    return drawing_from_json(data, strict=strict)


def jitter_drawing(D: Drawing, eps: float, seed: int = 0) -> Drawing:
    """Move every vertex by a small random amount (radians on the sphere)."""
    rng = np.random.default_rng(seed)
    if D.sphere:
        from .sphere import exp_map, tangent_frame

        frame = tangent_frame(D.vertices)
        v = frame.direction(rng.uniform(0.0, 2.0 * math.pi, D.n))
        pts = exp_map(D.vertices, v, rng.uniform(0.0, eps, D.n))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    else:
        pts = D.vertices + rng.uniform(-eps, eps, D.vertices.shape)
    return D.with_vertices(pts)


__all__ = [
    "SPHERE", "Sphere", "Drawing", "DrawingError", "ConvexPolygon", "Disk",
    "generate_sphere_threshold", "generate_planar_threshold", "density_stats",
    "save_drawing", "load_drawing", "jitter_drawing",
]
