import math
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import segments_cross_exact
from crossing_lab.counting import (
    BLOCKS,
    _row_blocks,
    count_crossings,
    count_crossings_brute,
    count_crossings_grid,
    edge_bounds,
    resolve_workers,
)
from crossing_lab.drawing import Drawing, generate_planar_threshold, generate_sphere_threshold, jitter_drawing
from crossing_lab.planar import AffineMap, affine_map, unit_square
from crossing_lab.sphere import SPHERE, from_lonlat, random_rotation, spherical_distance


def projected_count(D: Drawing) -> int:
    """Crossings by exact orientation tests after a gnomonic projection per pair.

    Valid for sphere threshold drawings with t < pi/3: a crossing point lies
    within t/2 of the first edge's midpoint c, so all four endpoints are within
    3t/2 < pi/2 of c; pairs with an endpoint outside that hemisphere cannot cross.
    """
    V, E = D.vertices, D.edges
    total = 0
    for i in range(len(E)):
        a, b = V[E[i]]
        c = (a + b) / np.linalg.norm(a + b)
        e1 = np.cross(c, [1.0, 0.0, 0.0] if abs(c[0]) < 0.9 else [0.0, 1.0, 0.0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(c, e1)

        def proj(p):
            h = p @ c
            return (p @ e1 / h, p @ e2 / h)

        for j in range(i + 1, len(E)):
            if set(E[i]) & set(E[j]):
                continue
            p, q = V[E[j]]
            if p @ c <= 0 or q @ c <= 0:
                continue
            res = segments_cross_exact(proj(a), proj(b), proj(p), proj(q))
            assert res is not None
            total += res
    return total


def planar_exact_count(D: Drawing) -> int:
    V, E = D.vertices, D.edges
    total = 0
    for i in range(len(E)):
        for j in range(i + 1, len(E)):
            if set(E[i]) & set(E[j]):
                continue
            res = segments_cross_exact(V[E[i, 0]], V[E[i, 1]], V[E[j, 0]], V[E[j, 1]])
            assert res is not None
            total += res
    return total


def test_equator_meridian_single_crossing():
    V = np.array([[1.0, 0, 0], [0, 1.0, 0], from_lonlat(math.radians(45), 0.5),
                  from_lonlat(math.radians(45), -0.5)])
    D = Drawing(SPHERE, V, [[0, 1], [2, 3]])
    for engine in ("brute", "grid"):
        r = count_crossings(D, engine)
        assert r.crossings == 1 and r.valid and r.pairs_tested == 1


def test_k4_convex_quadrilateral():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    K4 = Drawing(unit_square(), pts, [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]])
    for engine in ("brute", "grid"):
        r = count_crossings(K4, engine)
        assert r.crossings == 1
        # 15 pairs of which 12 share a vertex
        assert r.adjacent_skipped == 12
    assert count_crossings_brute(K4).pairs_tested == 3


def test_empty_and_complete_graphs(rng):
    empty = generate_sphere_threshold(50, 1e-6, sampler="random", seed=1)
    assert count_crossings_grid(empty).crossings == 0
    assert count_crossings_brute(empty).crossings == 0
    K8 = generate_sphere_threshold(8, math.pi, sampler="random", seed=2)
    assert K8.m == 28
    assert count_crossings_grid(K8).crossings == count_crossings_brute(K8).crossings


def test_counts_match_projection_oracle():
    for seed in range(4):
        D = generate_sphere_threshold(45, 0.9, sampler="random", seed=seed)
        r = count_crossings_brute(D)
        assert r.valid
        assert r.crossings == projected_count(D)


def test_planar_counts_match_exact_oracle():
    for seed in range(4):
        D = generate_planar_threshold(30, 0.35, unit_square(), seed=seed)
        assert count_crossings_grid(D).crossings == planar_exact_count(D)


def _random_instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 90))
    if rng.random() < 0.6:
        t = float(rng.uniform(0.05, math.pi))
        return generate_sphere_threshold(n, t, sampler=str(rng.choice(["random", "fibonacci"])), seed=seed)
    r = float(rng.uniform(0.02, 1.5))
    return generate_planar_threshold(n, r, unit_square(), seed=seed, sampler=str(rng.choice(["random", "grid"])))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40)
def test_engines_agree(seed):
    D = _random_instance(seed)
    b, g = count_crossings_brute(D), count_crossings_grid(D)
    assert b.crossings == g.crossings
    assert b.degenerate_pairs == g.degenerate_pairs
    assert g.pairs_tested <= b.pairs_tested
    assert b.crossings <= b.pairs_tested
    assert b.pairs_tested + b.adjacent_skipped == D.m * (D.m - 1) // 2


def test_worker_independence():
    D = generate_sphere_threshold(220, 1.1)
    for engine in ("brute", "grid"):
        ref = count_crossings(D, engine, workers=1)
        for w in (4, os.cpu_count() or 1, "auto"):
            r = count_crossings(D, engine, workers=w)
            assert (r.crossings, r.pairs_tested, r.adjacent_skipped) == (
                ref.crossings, ref.pairs_tested, ref.adjacent_skipped)


def test_row_blocks_partition():
    for m in (0, 1, 5, 63, 64, 1000, 12345):
        blocks = _row_blocks(m)
        assert len(blocks) <= BLOCKS
        covered = [i for a, b in blocks for i in range(a, b)]
        assert covered == list(range(m))


def test_resolve_workers(monkeypatch):
    monkeypatch.setenv("CROSSING_LAB_WORKERS", "3")
    assert resolve_workers(None) == 3
    assert resolve_workers("auto") == 3
    assert resolve_workers(2) == 2
    monkeypatch.delenv("CROSSING_LAB_WORKERS")
    assert resolve_workers(None) == (os.cpu_count() or 1)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25)
def test_rotation_invariance(seed):
    D = generate_sphere_threshold(60, 1.3, sampler="random", seed=seed)
    R = random_rotation(np.random.default_rng(seed + 1))
    r0 = count_crossings_grid(D)
    r1 = count_crossings_grid(D.with_vertices(D.vertices @ R.T))
    assert r0.valid and r1.valid
    assert r0.crossings == r1.crossings


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25)
def test_affine_invariance(seed):
    rng = np.random.default_rng(seed)
    D = generate_planar_threshold(50, 0.4, unit_square(), seed=seed)
    M = rng.normal(size=(2, 2))
    while abs(np.linalg.det(M)) < 0.1:
        M = rng.normal(size=(2, 2))
    T = AffineMap(M, rng.normal(size=2))
    img = Drawing(affine_map(D.ambient, T), T(D.vertices), D.edges)
    assert count_crossings_brute(img).crossings == count_crossings_brute(D).crossings


def test_bounding_caps_contain_arcs():
    D = generate_sphere_threshold(80, 2.5, sampler="random", seed=3)
    C, R, half = edge_bounds(D)
    a = D.vertices[D.edges[:, 0]]
    b = D.vertices[D.edges[:, 1]]
    for s in np.linspace(0.0, 1.0, 41):
        # points along each arc by normalised chord interpolation
        p = (1 - s) * a + s * b
        p /= np.linalg.norm(p, axis=1, keepdims=True)
        assert np.all(spherical_distance(p, C) <= half)


def test_degenerate_pair_reported_and_jitter_recovers():
    # two edges on the same great circle overlap
    V = np.array([from_lonlat(0.0, 0.0), from_lonlat(0.4, 0.0), from_lonlat(0.2, 0.0), from_lonlat(0.6, 0.0)])
    D = Drawing(SPHERE, V, [[0, 1], [2, 3]])
    for engine in ("brute", "grid"):
        r = count_crossings(D, engine)
        assert not r.valid and r.degenerate_pairs == 1 and r.degenerate_examples == [[0, 1]]
    J = count_crossings(jitter_drawing(D, 1e-9, seed=0))
    assert J.valid
