"""Tests for basis tables, coefficient maps, and the prior spectrum."""

import numpy as np
import pytest

from bayesalign import (
    Grid,
    InvalidInputError,
    TangentCoeffs,
    TangentFunction,
    coeffs_to_function,
    eval_basis,
    prior_spectrum,
    project_to_coeffs,
)


@pytest.fixture(params=["fourier", "legendre"])
def family(request):
    return request.param


def make_basis(family, size=8, n=1001):
    return eval_basis(family, size, Grid.uniform(n))


class TestEvalBasis:
    def test_elements_integrate_to_zero(self, family):
        b = make_basis(family)
        means = b.table @ b.grid.trapz_weights
        assert np.abs(means).max() < 1e-8

    def test_gram_is_identity(self, family):
        b = make_basis(family)
        gram = (b.table * b.grid.trapz_weights) @ b.table.T
        assert np.abs(gram - np.eye(b.size)).max() < 1e-6

    def test_gram_identity_across_sizes(self, family):
        for size in (2, 4, 10):
            b = make_basis(family, size=size, n=801)
            gram = (b.table * b.grid.trapz_weights) @ b.table.T
            assert np.abs(gram - np.eye(size)).max() < 1e-6
            assert np.abs(b.table @ b.grid.trapz_weights).max() < 1e-8

    def test_legendre_first_element_closed_form(self):
        # first shifted Legendre element is sqrt(3) * (2t - 1)
        b = make_basis("legendre", size=1)
        t = b.grid.points
        np.testing.assert_allclose(b.table[0], np.sqrt(3.0) * (2 * t - 1), atol=2e-6)

    def test_fourier_odd_size_rejected(self):
        with pytest.raises(InvalidInputError):
            eval_basis("fourier", 5, Grid.uniform(101))

    def test_unknown_family_rejected(self):
        with pytest.raises(InvalidInputError):
            eval_basis("wavelet", 4, Grid.uniform(101))


class TestCoefficientMaps:
    def test_zero_coeffs(self, family):
        b = make_basis(family)
        g = coeffs_to_function(TangentCoeffs(b, np.zeros(b.size)))
        np.testing.assert_allclose(g.values, 0.0)

    def test_unit_vector_reproduces_element(self, family):
        b = make_basis(family)
        e = np.zeros(b.size)
        e[2] = 1.0
        g = coeffs_to_function(TangentCoeffs(b, e))
        np.testing.assert_allclose(g.values, b.table[2])

    def test_linearity(self, family):
        rng = np.random.default_rng(0)
        b = make_basis(family)
        u, w = rng.standard_normal((2, b.size))
        lhs = coeffs_to_function(TangentCoeffs(b, 2.0 * u + 3.0 * w)).values
        rhs = 2.0 * coeffs_to_function(TangentCoeffs(b, u)).values
        rhs += 3.0 * coeffs_to_function(TangentCoeffs(b, w)).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_projection_of_element(self, family):
        b = make_basis(family)
        g = TangentFunction(b.grid, b.table[1].copy())
        v = project_to_coeffs(g, b).v
        expected = np.zeros(b.size)
        expected[1] = 1.0
        np.testing.assert_allclose(v, expected, atol=1e-6)

    def test_projection_of_zero(self, family):
        b = make_basis(family)
        v = project_to_coeffs(TangentFunction(b.grid, np.zeros(b.grid.n)), b).v
        np.testing.assert_allclose(v, 0.0)

    def test_span_roundtrip(self, family):
        rng = np.random.default_rng(1)
        b = make_basis(family, size=10)
        v = rng.standard_normal(10)
        g = coeffs_to_function(TangentCoeffs(b, v))
        back = project_to_coeffs(g, b).v
        assert np.abs(back - v).max() < 1e-6

    def test_prior_draws_have_zero_mean_function(self, family):
        rng = np.random.default_rng(2)
        b = make_basis(family, size=6, n=301)
        spec = prior_spectrum(0.8, b)
        for _ in range(20):
            v = spec.lambdas * rng.standard_normal(b.size)
            g = coeffs_to_function(TangentCoeffs(b, v))
            assert abs(b.grid.trapz_weights @ g.values) < 1e-8


class TestPriorSpectrum:
    def test_first_eigenvalue(self):
        b = make_basis("legendre", size=4, n=101)
        spec = prior_spectrum(0.7, b)
        assert abs(spec.lambdas[0] - 0.49) < 1e-14

    def test_quarter_decay(self):
        b = make_basis("legendre", size=8, n=101)
        lam = prior_spectrum(1.3, b).lambdas
        for k in range(1, 5):
            assert abs(lam[k - 1] / lam[2 * k - 1] - 4.0) < 1e-12

    def test_fourier_pairs_share_index(self):
        # pair-index rule: elements of one frequency share an eigenvalue
        b = make_basis("fourier", size=4, n=101)
        lam = prior_spectrum(1.0, b).lambdas
        np.testing.assert_allclose(lam, [1.0, 1.0, 0.25, 0.25])

    def test_variances_are_squared_scales(self):
        b = make_basis("fourier", size=4, n=101)
        spec = prior_spectrum(2.0, b)
        np.testing.assert_allclose(spec.variances, spec.lambdas**2)

    def test_nonpositive_sigma_rejected(self):
        b = make_basis("fourier", size=4, n=101)
        with pytest.raises(InvalidInputError):
            prior_spectrum(0.0, b)
