import math

import numpy as np
import pytest

from crossing_lab.quadrature import (
    QuadratureError,
    integrate,
    integrate_batch,
    integrate_nested,
    integrate_nested_batch,
)


def test_scalar_examples():
    assert integrate(np.sin, 0.0, math.pi) == pytest.approx(2.0, rel=1e-12)
    assert integrate(lambda x: np.exp(-x), 0.0, 30.0) == pytest.approx(1 - math.exp(-30), rel=1e-12)
    # a kink announced as a breakpoint is integrated exactly
    assert integrate(lambda x: np.abs(x - 0.3), 0.0, 1.0, breakpoints=[0.3]) == pytest.approx(0.29, rel=1e-13)
    assert integrate(lambda x: (x < 0.7).astype(float), 0.0, 1.0, breakpoints=[0.7]) == pytest.approx(0.7)


def test_batch_independent_integrals():
    lo = np.zeros(5)
    hi = np.arange(1.0, 6.0)
    k = np.arange(5)
    res = integrate_batch(lambda x, o: x ** k[o], lo, hi, rel_tol=1e-12)
    np.testing.assert_allclose(res.value, hi ** (k + 1) / (k + 1), rtol=1e-12)
    assert np.all(res.error >= 0)


def test_vector_valued():
    res = integrate_batch(lambda x, o: np.stack([np.cos(x), np.sin(x)], axis=1), [0.0], [math.pi / 2],
                          rel_tol=1e-12)
    np.testing.assert_allclose(res.value[0], [1.0, 1.0], rtol=1e-12)


def test_sqrt_endpoint_singularity_refines():
    val = integrate(np.sqrt, 0.0, 1.0, rel_tol=1e-9)
    assert val == pytest.approx(2 / 3, rel=1e-8)


def test_nested_triangle():
    # int_0^1 int_0^u (u + z) dz du = int 3u^2/2 = 1/2
    val, err = integrate_nested(lambda u, z: u + z, lambda u: np.ones((len(u), 1)), 0.0, 1.0,
                                lambda u: (np.zeros_like(u), u), rel_tol=1e-10)
    assert val[0] == pytest.approx(0.5, rel=1e-10)


def test_nested_batch_weights():
    lo, hi = np.zeros(3), np.array([1.0, 2.0, 3.0])
    val, _ = integrate_nested_batch(lambda u, z, o: np.ones_like(z),
                                    lambda u, o: np.stack([np.ones_like(u), u], axis=1),
                                    lo, hi, lambda u, o: (np.zeros_like(u), u), rel_tol=1e-11)
    np.testing.assert_allclose(val[:, 0], hi**2 / 2, rtol=1e-11)
    np.testing.assert_allclose(val[:, 1], hi**3 / 3, rtol=1e-11)


def test_non_convergence_raises():
    with pytest.raises(QuadratureError) as info:
        integrate_batch(lambda x, o: 1.0 / x, [0.0], [1.0], rel_tol=1e-12, max_rounds=6)
    assert info.value.estimate is not None
