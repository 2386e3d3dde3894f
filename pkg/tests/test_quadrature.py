"""Quadrature engine: panel rules and the endpoint-smoothed map."""

import numpy as np
import pytest

from fracctrl.quadrature import (
    gauss_legendre_panels,
    smoothed_rule,
    smoothstep,
    smoothstep_deriv,
)


class TestPanels:
    def test_node_count_validation(self):
        with pytest.raises(ValueError):
            gauss_legendre_panels(60)
        with pytest.raises(ValueError):
            gauss_legendre_panels(0)

    def test_polynomial_exactness(self):
        # 8-node panels integrate degree-15 polynomials exactly
        x, w = gauss_legendre_panels(32)
        for deg in (0, 7, 15):
            got = np.dot(w, x**deg)
            assert got == pytest.approx(1.0 / (deg + 1), rel=1e-14)

    def test_weights_positive_nodes_interior(self):
        x, w = gauss_legendre_panels(64)
        assert np.all(w > 0)
        assert np.all((0 < x) & (x < 1))


class TestSmoothstep:
    def test_endpoint_values(self):
        assert smoothstep(0.0) == 0.0
        assert smoothstep(1.0) == 1.0
        assert smoothstep_deriv(0.0) == 0.0
        assert smoothstep_deriv(1.0) == 0.0

    def test_symmetry(self):
        s = np.linspace(0, 1, 11)
        np.testing.assert_allclose(smoothstep(1 - s), 1 - smoothstep(s), atol=1e-15)

    def test_monotone(self):
        s = np.linspace(0, 1, 101)
        assert np.all(np.diff(smoothstep(s)) > 0)


class TestSmoothedRule:
    def test_constant_exact(self):
        s, w = smoothed_rule(2.0, 16)
        assert w.sum() == pytest.approx(2.0, rel=1e-14)

    def test_smooth_integrand(self):
        s, w = smoothed_rule(1.0, 64)
        assert np.dot(w, np.exp(s)) == pytest.approx(np.e - 1.0, rel=1e-13)

    def test_endpoint_singular_derivative(self):
        # int_0^1 s^1.5 ds: fractional endpoint behaviour the plain rule
        # resolves only slowly
        s, w = smoothed_rule(1.0, 64)
        assert np.dot(w, s**1.5) == pytest.approx(0.4, rel=1e-12)

    def test_weakly_singular_kernel(self):
        # int_0^1 (1-s)^(alpha-1) ds = 1/alpha for alpha in (1, 2)
        alpha = 1.25
        s, w = smoothed_rule(1.0, 64)
        got = np.dot(w, (1.0 - s) ** (alpha - 1.0))
        assert got == pytest.approx(1.0 / alpha, rel=1e-10)

    def test_zero_length(self):
        s, w = smoothed_rule(0.0, 16)
        assert np.all(s == 0.0) and np.all(w == 0.0)
