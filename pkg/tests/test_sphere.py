import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from conftest import gnomonic_oracle, random_unit, unit_vectors
from crossing_lab import _kernels
from crossing_lab.sphere import (
    CROSS,
    NO_CROSS,
    Crossing,
    GeodesicArc,
    arc_cross,
    arc_cross_codes,
    cap_mass,
    exp_map,
    fibonacci_sphere,
    from_lonlat,
    point_to_arc_distance,
    random_rotation,
    sample_uniform_sphere,
    spherical_distance,
    tangent_frame,
)

deg = math.radians


# -- distance ----------------------------------------------------------------


def test_distance_examples():
    p = np.array([0.3, -0.4, math.sqrt(0.75)])
    assert spherical_distance(p, p) == 0.0
    assert spherical_distance([1, 0, 0], [-1, 0, 0]) == pytest.approx(math.pi, abs=1e-15)
    assert spherical_distance([1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2, abs=1e-15)


def test_distance_accurate_near_zero_and_pi():
    x = np.array([1.0, 0.0, 0.0])
    for s in (1e-9, 1e-6, math.pi - 1e-7):
        y = exp_map(x, np.array([0.0, 1.0, 0.0]), s)
        assert spherical_distance(x, y) == pytest.approx(s, rel=1e-9)


@given(unit_vectors(), unit_vectors())
def test_distance_symmetric_and_bounded(a, b):
    d = spherical_distance(a, b)
    assert d == spherical_distance(b, a)
    assert 0.0 <= d <= math.pi


# -- frames and the exponential map ----------------------------------------------


def test_frame_at_pole_uses_x_axis():
    f = tangent_frame(np.array([0.0, 0.0, 1.0]))
    # k = (1,0,0) fallback: e1 = normalize((1,0,0) x (0,0,1)) = (0,-1,0)
    np.testing.assert_allclose(f.e1, [0.0, -1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(f.e2, np.cross(f.base, f.e1), atol=1e-15)
    np.testing.assert_allclose(f.direction(0.0), f.e1)
    np.testing.assert_allclose(f.direction(math.pi / 2), f.e2, atol=1e-15)


def test_frame_convention_away_from_pole():
    x = from_lonlat(0.7, 0.2)
    f = tangent_frame(x)
    k = np.array([0.0, 0.0, 1.0])
    c = np.cross(k, x)
    np.testing.assert_allclose(f.e1, c / np.linalg.norm(c), atol=1e-15)


def test_frame_batch_matches_single(rng):
    X = random_unit(rng, 20)
    X[3] = [0.0, 0.0, -1.0]
    F = tangent_frame(X)
    for i in range(len(X)):
        f = tangent_frame(X[i])
        np.testing.assert_allclose(F.e1[i], f.e1, atol=1e-15)
        np.testing.assert_allclose(F.e2[i], f.e2, atol=1e-15)


@given(unit_vectors())
def test_frame_orthonormal(x):
    f = tangent_frame(x)
    for u, v in ((f.e1, x), (f.e2, x), (f.e1, f.e2)):
        assert abs(np.dot(u, v)) < 1e-10
    assert abs(np.linalg.norm(f.e1) - 1) < 1e-10
    assert abs(np.linalg.norm(f.e2) - 1) < 1e-10


def test_exp_map_examples():
    x = np.array([0.0, 0.0, 1.0])
    np.testing.assert_allclose(exp_map(x, [1.0, 0.0, 0.0], 0.0), x)
    np.testing.assert_allclose(exp_map(x, [1.0, 0.0, 0.0], math.pi / 2), [1.0, 0.0, 0.0], atol=1e-15)


@given(unit_vectors(), st.floats(0.0, 2 * math.pi), st.floats(0.0, math.pi))
def test_exp_map_distance(x, theta, s):
    v = tangent_frame(x).direction(theta)
    y = exp_map(x, v, s)
    assert abs(np.linalg.norm(y) - 1) < 1e-12
    assert abs(spherical_distance(x, y) - s) < 1e-10


# -- arc predicate ------------------------------------------------------------------


def _meridian(lon, lat1, lat2):
    return GeodesicArc(from_lonlat(lon, lat1), from_lonlat(lon, lat2))


def test_arc_cross_examples():
    A = GeodesicArc(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    assert arc_cross(A, _meridian(deg(45), deg(30), deg(-30))) == CROSS
    assert arc_cross(A, _meridian(deg(45), deg(30), deg(10))) == NO_CROSS
    sub = GeodesicArc(from_lonlat(deg(10), 0.0), from_lonlat(deg(60), 0.0))
    res = arc_cross(A, sub)
    assert res.status is Crossing.DEGENERATE and res.reason == "cocircular supports"


def test_arc_cross_far_side_candidate_is_not_a_crossing():
    # the supports meet at (+-1/sqrt2, +-1/sqrt2, 0) but B lives near the antipode of A's crossing point
    A = GeodesicArc(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    assert arc_cross(A, _meridian(deg(225), deg(30), deg(-30))) == NO_CROSS


def test_arc_cross_degenerate_reasons():
    A = GeodesicArc(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    shared = GeodesicArc(np.array([0, 1.0, 0]), from_lonlat(deg(120), deg(30)))
    assert arc_cross(A, shared).reason == "shared endpoint"
    # B passes exactly through A's endpoint (1,0,0)
    touch = _meridian(0.0, deg(20), deg(-20))
    assert arc_cross(A, touch).reason == "intersection at an endpoint"
    # T-junction: B ends on the interior of A
    tee = GeodesicArc(from_lonlat(deg(45), 0.0), from_lonlat(deg(45), deg(30)))
    assert arc_cross(A, tee).degenerate


@given(unit_vectors(), unit_vectors(), unit_vectors(), unit_vectors())
def test_arc_cross_symmetries(a1, b1, a2, b2):
    assume(np.linalg.norm(np.cross(a1, b1)) > 1e-6 and np.linalg.norm(np.cross(a2, b2)) > 1e-6)
    A, B = GeodesicArc(a1, b1), GeodesicArc(a2, b2)
    r = arc_cross(A, B)
    assert arc_cross(B, A) == r
    assert arc_cross(GeodesicArc(b1, a1), B) == r
    assert arc_cross(A, GeodesicArc(b2, a2)) == r


@given(unit_vectors(), unit_vectors(), unit_vectors(), unit_vectors())
def test_arc_cross_matches_gnomonic_oracle(a1, b1, a2, b2):
    assume(np.linalg.norm(np.cross(a1, b1)) > 1e-6 and np.linalg.norm(np.cross(a2, b2)) > 1e-6)
    expected = gnomonic_oracle(a1, b1, a2, b2)
    assume(expected is not None)
    r = arc_cross(GeodesicArc(a1, b1), GeodesicArc(a2, b2))
    assume(not r.degenerate)
    assert r.crosses == expected


def test_arc_cross_oracle_bulk(rng):
    """Batch predicate against the projection oracle on random clustered quadruples."""
    checked = 0
    for _ in range(3000):
        c = random_unit(rng, 1)[0]
        pts = c + 0.6 * rng.standard_normal((4, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        expected = gnomonic_oracle(*pts)
        if expected is None:
            continue
        code = _kernels.arc_code(*pts)
        if code > _kernels.CROSS:
            continue
        assert (code == _kernels.CROSS) == expected
        checked += 1
    assert checked > 2000


def test_batch_codes_match_scalar(rng):
    P = [random_unit(rng, 500) for _ in range(4)]
    codes = arc_cross_codes(*P)
    for i in range(0, 500, 7):
        assert codes[i] == _kernels.arc_code(P[0][i], P[1][i], P[2][i], P[3][i])


@given(st.integers(0, 2**32 - 1))
def test_arc_cross_rotation_invariant(seed):
    rng = np.random.default_rng(seed)
    R = random_rotation(rng)
    a1, b1, a2, b2 = random_unit(rng, 4)
    r = arc_cross(GeodesicArc(a1, b1), GeodesicArc(a2, b2))
    assume(not r.degenerate)
    r2 = arc_cross(GeodesicArc(R @ a1, R @ b1), GeodesicArc(R @ a2, R @ b2))
    assert r2 == r


def test_arc_rejects_bad_endpoints():
    with pytest.raises(ValueError):
        GeodesicArc(np.array([1.0, 0, 0]), np.array([-1.0, 0, 0]))
    with pytest.raises(ValueError):
        GeodesicArc(np.array([2.0, 0, 0]), np.array([0, 1.0, 0]))


def test_crossing_probability_full_density():
    """Four uniform points: [x1x2] crosses [x3x4] with probability 1/8."""
    rng = np.random.Generator(np.random.Philox(key=[7, 0]))
    N = 400_000
    P = [sample_uniform_sphere(rng, N) for _ in range(4)]
    codes = arc_cross_codes(*P)
    assert not np.any(codes > _kernels.CROSS)
    p = np.mean(codes == _kernels.CROSS)
    se = math.sqrt(p * (1 - p) / N)
    assert abs(p - 0.125) < 4 * se


# -- point to arc distance -------------------------------------------------------


def test_point_to_arc_examples():
    A = GeodesicArc(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    assert point_to_arc_distance(from_lonlat(deg(30), 0.0), A) == pytest.approx(0.0, abs=1e-15)
    assert point_to_arc_distance(np.array([0, 0, 1.0]), A) == pytest.approx(math.pi / 2)


def test_point_to_arc_against_dense_sampling(rng):
    for _ in range(30):
        a, b, x = random_unit(rng, 3)
        A = GeodesicArc(a, b)
        dense = spherical_distance(A.points(100_001), x).min()
        assert point_to_arc_distance(x, A) == pytest.approx(dense, abs=1e-8)


# -- sampling -----------------------------------------------------------------------


def test_uniform_sampler_moments_and_cap():
    rng = np.random.Generator(np.random.Philox(key=[3, 0]))
    X = sample_uniform_sphere(rng, 10**6)
    assert np.all(np.abs(X.mean(axis=0)) < 4 * (1 / math.sqrt(3)) / 1e3)
    pole = np.array([0.0, 0.0, 1.0])
    m = cap_mass(X, pole, math.pi / 3)
    assert abs(m - 0.25) < 4 * math.sqrt(0.25 * 0.75 / 1e6)
    R = random_rotation(np.random.default_rng(5))
    m_rot = cap_mass(X @ R.T, pole, math.pi / 3)
    assert abs(m_rot - 0.25) < 4 * math.sqrt(0.25 * 0.75 / 1e6)


def test_uniform_sampler_single_point_and_determinism():
    a = sample_uniform_sphere(np.random.default_rng(1))
    b = sample_uniform_sphere(np.random.default_rng(1))
    assert a.shape == (3,)
    np.testing.assert_array_equal(a, b)


def test_fibonacci_examples():
    one = fibonacci_sphere(1)
    assert one.shape == (1, 3) and abs(np.linalg.norm(one[0]) - 1) < 1e-15
    n = 10_000
    X = fibonacci_sphere(n)
    np.testing.assert_allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-12)
    assert abs(cap_mass(X, [0, 0, 1.0], math.pi / 2) - 0.5) <= 1.0 / n
    assert abs(cap_mass(X, [0.3, 0.5, math.sqrt(0.66)], math.pi / 3) - 0.25) < 0.01
    with pytest.raises(ValueError):
        fibonacci_sphere(0)


def test_random_rotation_properties(rng):
    for _ in range(20):
        R = random_rotation(rng)
        np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-10)
        assert np.linalg.det(R) == pytest.approx(1.0)
        a, b = random_unit(rng, 2)
        assert spherical_distance(R @ a, R @ b) == pytest.approx(spherical_distance(a, b), abs=1e-10)
