"""Exact crossing counts for finite drawings.

Two engines share the compiled predicate: ``brute`` tests every unordered
pair of non-adjacent edges, ``grid`` only pairs whose bounding caps (sphere)
or boxes (plane) overlap.  Work is split into a fixed number of row blocks,
so the integer totals do not depend on the number of threads.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .drawing import Drawing

BLOCKS = 64
DEGENERATE_LISTING = 20


@dataclass
class CrossingReport:
    crossings: int
    pairs_tested: int
    adjacent_skipped: int
    degenerate_pairs: int
    engine: str
    wall_time_ms: float = 0.0
    degenerate_examples: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.degenerate_pairs == 0

    def to_dict(self) -> dict:
        return {
            "crossings": self.crossings,
            "pairs_tested": self.pairs_tested,
            "adjacent_skipped": self.adjacent_skipped,
            "degenerate_pairs": self.degenerate_pairs,
            "degenerate_examples": self.degenerate_examples,
            "engine": self.engine,
            "valid": self.valid,
            "wall_time_ms": self.wall_time_ms,
        }


def resolve_workers(workers) -> int:
    """``None``/"auto" means the environment default or the CPU count."""
    if workers in (None, "auto", 0):
        env = os.environ.get("CROSSING_LAB_WORKERS")
        if env and env != "auto":
            return max(1, int(env))
        return os.cpu_count() or 1
    return max(1, int(workers))


def _endpoint_arrays(D: Drawing):
    E1 = np.ascontiguousarray(D.vertices[D.edges[:, 0]])
    E2 = np.ascontiguousarray(D.vertices[D.edges[:, 1]])
    if D.sphere:
        N = np.cross(E1, E2)
        N /= np.linalg.norm(N, axis=1, keepdims=True)
    else:
        N = np.zeros((len(E1), 3))
    return E1, E2, np.ascontiguousarray(N)


def _row_blocks(m: int, blocks: int = BLOCKS) -> list[tuple[int, int]]:
    """Contiguous row ranges holding roughly equal numbers of upper-triangular pairs."""
    if m == 0:
        return []
    total = m * (m - 1) / 2.0
    cuts = [0]
    for b in range(1, blocks):
        # rows [0, i) carry i*m - i(i+1)/2 pairs; solve for the b-th quantile
        target = total * b / blocks
        i = (2 * m - 1 - math.sqrt(max(0.0, (2 * m - 1) ** 2 - 8 * target))) / 2.0
        cuts.append(min(m, max(cuts[-1], int(round(i)))))
    cuts.append(m)
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def _run_blocks(fn, blocks, workers):
    cap = DEGENERATE_LISTING

    def job(rng):
        out = np.zeros((cap, 2), dtype=np.int64)
        res = fn(rng[0], rng[1], out)
        return res, out[: min(cap, res[3])]

    if workers == 1 or len(blocks) <= 1:
        results = [job(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(job, blocks))
    cross = tested = adj = deg = 0
    examples = []
    for (c, t, a, d), ex_pairs in results:
        cross += c
        tested += t
        adj += a
        deg += d
        for i, j in ex_pairs:
            if len(examples) < cap:
                examples.append([int(i), int(j)])
    return cross, tested, adj, deg, examples


def count_crossings_brute(D: Drawing, workers=1) -> CrossingReport:
    """Test every unordered pair of edges; adjacent pairs are skipped."""
    t0 = time.perf_counter()
    workers = resolve_workers(workers)
    E1, E2, N = _endpoint_arrays(D)
    edges = np.ascontiguousarray(D.edges)
    sphere = D.sphere

    def fn(i0, i1, out):
        return _kernels.count_brute_rows(sphere, edges, E1, E2, N, i0, i1, out)

    c, t, a, d, ex = _run_blocks(fn, _row_blocks(D.m), workers)
    return CrossingReport(int(c), int(t), int(a), int(d), "brute",
                          1e3 * (time.perf_counter() - t0), ex)


def edge_bounds(D: Drawing):
    """Bounding cap (centre, (cos r, sin r)) or box (centre, half extents) per edge."""
    E1 = D.vertices[D.edges[:, 0]]
    E2 = D.vertices[D.edges[:, 1]]
    if D.sphere:
        C = E1 + E2
        C /= np.linalg.norm(C, axis=1, keepdims=True)
        half = 0.5 * np.arctan2(np.linalg.norm(np.cross(E1, E2), axis=1), np.sum(E1 * E2, axis=1))
        # pad slightly so rounding never shrinks a cap below its arc
        half = half * (1.0 + 1e-9) + 1e-12
        R = np.stack([np.cos(half), np.sin(half)], axis=1)
        return C, R, half
    C = 0.5 * (E1 + E2)
    R = 0.5 * np.abs(E2 - E1)
    return C, R, R.max(axis=1) if len(R) else np.zeros(0)


def count_crossings_grid(D: Drawing, workers=1) -> CrossingReport:
    """Count crossings among edge pairs with overlapping bounds only.

    Edges are bucketed by the cell of their bound centre in a uniform grid
    whose cells are at least as wide as the largest bound diameter, so any
    two overlapping bounds sit in the same or adjacent cells.
    """
    t0 = time.perf_counter()
    workers = resolve_workers(workers)
    m = D.m
    if m == 0:
        return CrossingReport(0, 0, 0, 0, "grid", 1e3 * (time.perf_counter() - t0))
    E1, E2, N = _endpoint_arrays(D)
    edges = np.ascontiguousarray(D.edges)
    C, R, rad = edge_bounds(D)
    dim = 3 if D.sphere else 2
    if D.sphere:
        # chord spanned by two touching caps
        reach = 2.0 * math.sin(min(math.pi, 2.0 * float(rad.max())) / 2.0)
        lo = np.full(3, -1.0)
        span = 2.0
    else:
        reach = 2.0 * float(np.max(R)) * math.sqrt(2.0)
        lo = C.min(axis=0)
        span = float(np.max(C.max(axis=0) - lo))
    ncell = 1 if reach <= 0 else max(1, min(int(span / reach), 256 if dim == 2 else 64))
    if span <= 0:
        ncell = 1
    h = span / ncell if span > 0 else 1.0
    coords = np.clip(((C - lo) / h).astype(np.int64), 0, ncell - 1)
    if dim == 3:
        cell_of = coords[:, 0] + ncell * (coords[:, 1] + ncell * coords[:, 2])
    else:
        cell_of = coords[:, 0] + ncell * coords[:, 1]
    order = np.argsort(cell_of, kind="stable").astype(np.int64)
    counts = np.bincount(cell_of, minlength=ncell**dim)
    cell_start = np.zeros(ncell**dim + 1, dtype=np.int64)
    cell_start[1:] = np.cumsum(counts)
    C = np.ascontiguousarray(C, dtype=float)
    R = np.ascontiguousarray(R, dtype=float)
    cell_of = np.ascontiguousarray(cell_of)
    sphere = D.sphere

    def fn(i0, i1, out):
        return _kernels.count_grid_rows(sphere, edges, E1, E2, N, C, R, cell_of, ncell, dim,
                                        order, cell_start, i0, i1, out)

    c, t, a, d, ex = _run_blocks(fn, _row_blocks(m), workers)
    return CrossingReport(int(c), int(t), int(a), int(d), "grid",
                          1e3 * (time.perf_counter() - t0), ex)


ENGINES = {"brute": count_crossings_brute, "grid": count_crossings_grid}


def count_crossings(D: Drawing, engine: str = "grid", workers=1) -> CrossingReport:
    try:
        fn = ENGINES[engine]
    except KeyError:
        raise ValueError(f"unknown engine {engine!r}") from None
    return fn(D, workers)
