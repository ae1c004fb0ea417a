"""Tests for sampled functions, square-root velocity transforms, and metrics."""

import numpy as np
import pytest

from bayesalign import (
    Grid,
    InvalidInputError,
    SampledFunction,
    Srvf,
    Warping,
    derivative,
    from_srvf,
    l2_dist,
    sse,
    to_srvf,
    warp_function,
    warp_srvf,
)


def uniform_fn(n, fn):
    g = Grid.uniform(n)
    return SampledFunction(g, fn(g.points))


def smooth_random_function(rng, grid, n_modes=4, scale=1.0):
    t = grid.points
    vals = np.zeros_like(t)
    for k in range(1, n_modes + 1):
        a, b = rng.normal(size=2) * scale / k
        vals += a * np.sin(2 * np.pi * k * t) + b * np.cos(2 * np.pi * k * t)
    return SampledFunction(grid, vals)


def random_smooth_warp(rng, grid, amplitude=0.15):
    t = grid.points
    vals = t + amplitude * rng.uniform(-1, 1) * np.sin(np.pi * t)
    vals += 0.5 * amplitude * rng.uniform(-1, 1) * np.sin(2 * np.pi * t) / 2
    return Warping(grid, vals)


class TestGrid:
    def test_too_short(self):
        with pytest.raises(InvalidInputError):
            Grid(np.array([0.0, 1.0]))

    def test_not_increasing(self):
        with pytest.raises(InvalidInputError):
            Grid(np.array([0.0, 0.6, 0.5, 1.0]))

    def test_bad_endpoints(self):
        with pytest.raises(InvalidInputError):
            Grid(np.array([0.0, 0.5, 0.99]))

    def test_nonuniform_rejected(self):
        with pytest.raises(InvalidInputError):
            Grid(np.array([0.0, 0.1, 0.5, 1.0]))

    def test_weights_sum_to_one(self):
        g = Grid.uniform(57)
        assert abs(g.trapz_weights.sum() - 1.0) < 1e-14


class TestDerivative:
    def test_affine_exact(self):
        f = uniform_fn(101, lambda t: 3.0 * t + 1.0)
        np.testing.assert_allclose(derivative(f).values, 3.0, rtol=0, atol=1e-12)

    def test_constant_zero(self):
        f = uniform_fn(11, lambda t: np.full_like(t, 2.5))
        np.testing.assert_allclose(derivative(f).values, 0.0, atol=1e-15)

    def test_quadratic_interior(self):
        # closed form: d/dt t^2 = 2t; central differences are exact for
        # quadratics so only roundoff shows up in the interior
        f = uniform_fn(1001, lambda t: t**2)
        d = derivative(f).values
        t = f.grid.points
        assert np.abs(d[1:-1] - 2.0 * t[1:-1]).max() < 1e-4

    def test_short_grid_rejected(self):
        with pytest.raises(InvalidInputError):
            SampledFunction(Grid(np.array([0.0, 1.0])), np.zeros(2))


class TestSrvfTransform:
    def test_identity_function(self):
        f = uniform_fn(101, lambda t: t)
        np.testing.assert_allclose(to_srvf(f).values, 1.0, atol=1e-12)

    def test_constant_function(self):
        f = uniform_fn(101, lambda t: np.full_like(t, 4.0))
        np.testing.assert_allclose(to_srvf(f).values, 0.0, atol=1e-15)

    def test_quadratic_closed_form(self):
        f = uniform_fn(1001, lambda t: t**2)
        q = to_srvf(f).values
        t = f.grid.points
        assert np.abs(q[1:-1] - np.sqrt(2.0 * t[1:-1])).max() < 2e-3

    def test_from_constant_one(self):
        g = Grid.uniform(101)
        q = Srvf(g, np.ones(101))
        np.testing.assert_allclose(from_srvf(q, 0.0).values, g.points, atol=1e-14)

    def test_from_zero(self):
        g = Grid.uniform(101)
        q = Srvf(g, np.zeros(101))
        np.testing.assert_allclose(from_srvf(q, 2.0).values, 2.0)

    def test_roundtrip_sine(self):
        f = uniform_fn(1001, lambda t: np.sin(2 * np.pi * t))
        back = from_srvf(to_srvf(f), f.values[0])
        assert np.abs(back.values - f.values).max() < 1e-3

    def test_roundtrip_error_halves_under_refinement(self):
        def err(n):
            f = uniform_fn(n, lambda t: np.sin(2 * np.pi * t) + 0.5 * t)
            back = from_srvf(to_srvf(f), f.values[0])
            return np.abs(back.values - f.values).max()

        errors = [err(n) for n in (101, 201, 401, 801)]
        for a, b in zip(errors, errors[1:]):
            assert b < a / 1.8


class TestWarpAction:
    def test_identity_warp(self):
        rng = np.random.default_rng(0)
        g = Grid.uniform(101)
        f = smooth_random_function(rng, g)
        gam = Warping(g, g.points.copy())
        np.testing.assert_allclose(warp_function(f, gam).values, f.values)
        q = to_srvf(f)
        np.testing.assert_allclose(warp_srvf(q, gam).values, q.values, atol=1e-12)

    def test_warp_of_identity_function_returns_warp(self):
        g = Grid.uniform(101)
        f = SampledFunction(g, g.points.copy())
        gam = Warping(g, g.points**2)
        np.testing.assert_allclose(warp_function(f, gam).values, gam.values, atol=1e-14)

    def test_sine_composition_closed_form(self):
        g = Grid.uniform(1001)
        f = SampledFunction(g, np.sin(2 * np.pi * g.points))
        gam = Warping(g, g.points**2)
        out = warp_function(f, gam)
        assert np.abs(out.values - np.sin(2 * np.pi * g.points**2)).max() < 1e-3

    def test_warp_srvf_norm_preserved(self):
        rng = np.random.default_rng(1)
        g = Grid.uniform(801)
        q = to_srvf(smooth_random_function(rng, g))
        gam = random_smooth_warp(rng, g)
        assert abs(warp_srvf(q, gam).norm - q.norm) < 5.0 / g.n

    def test_unit_srvf_sqrt_slope(self):
        # gamma(t) = t^2 has gamma' = 2t, so warping q = 1 gives sqrt(2t)
        g = Grid.uniform(1001)
        q = Srvf(g, np.ones(g.n))
        gam = Warping(g, g.points**2)
        out = warp_srvf(q, gam).values
        assert np.abs(out[1:-1] - np.sqrt(2.0 * g.points[1:-1])).max() < 2e-3

    def test_out_of_range_warp_rejected(self):
        g = Grid.uniform(101)
        q = Srvf(g, np.ones(g.n))
        bad = Warping.__new__(Warping)
        object.__setattr__(bad, "grid", g)
        object.__setattr__(bad, "values", g.points * 1.001)
        with pytest.raises(InvalidInputError):
            warp_srvf(q, bad)


class TestMetrics:
    def test_l2_zero_on_equal(self):
        g = Grid.uniform(101)
        a = Srvf(g, np.sin(g.points))
        assert l2_dist(a, a) == 0.0

    def test_l2_unit_gap(self):
        g = Grid.uniform(101)
        a = Srvf(g, np.ones(g.n))
        b = Srvf(g, np.zeros(g.n))
        assert abs(l2_dist(a, b) - 1.0) < 1e-12

    def test_l2_linear_closed_form(self):
        # integral of t^2 over [0,1] is 1/3, so the distance is 1/sqrt(3)
        g = Grid.uniform(1001)
        a = Srvf(g, g.points.copy())
        b = Srvf(g, np.zeros(g.n))
        assert abs(l2_dist(a, b) - 1.0 / np.sqrt(3.0)) < 1e-6

    def test_l2_grid_mismatch(self):
        a = Srvf(Grid.uniform(101), np.ones(101))
        b = Srvf(Grid.uniform(51), np.ones(51))
        with pytest.raises(InvalidInputError):
            l2_dist(a, b)

    def test_l2_is_a_metric_on_random_triples(self):
        rng = np.random.default_rng(7)
        g = Grid.uniform(64)
        for _ in range(50):
            a, b, c = (smooth_random_function(rng, g) for _ in range(3))
            dab, dba = l2_dist(a, b), l2_dist(b, a)
            assert dab == dba
            assert dab >= 0
            assert l2_dist(a, c) <= dab + l2_dist(b, c) + 1e-12
        assert l2_dist(a, a) == 0.0

    def test_sse_zero_and_symmetry(self):
        g = Grid.uniform(101)
        a = Warping(g, g.points.copy())
        b = Warping(g, g.points**2)
        assert sse(a, a) == 0.0
        assert sse(a, b) == sse(b, a)

    def test_sse_direct_summation_oracle(self):
        g = Grid.uniform(101)
        a = Warping(g, g.points.copy())
        b = Warping(g, g.points**2)
        expected = sum((ti - ti**2) ** 2 for ti in g.points)
        assert abs(sse(a, b) - expected) < 1e-12

    def test_sse_grid_mismatch(self):
        a = Warping(Grid.uniform(101), Grid.uniform(101).points)
        b = Warping(Grid.uniform(51), Grid.uniform(51).points)
        with pytest.raises(InvalidInputError):
            sse(a, b)


class TestIsometry:
    def test_warping_isometry_random_trials(self):
        rng = np.random.default_rng(42)
        g = Grid.uniform(501)
        for _ in range(40):
            q1 = to_srvf(smooth_random_function(rng, g))
            q2 = to_srvf(smooth_random_function(rng, g))
            gam = random_smooth_warp(rng, g)
            lhs = l2_dist(warp_srvf(q1, gam), warp_srvf(q2, gam))
            rhs = l2_dist(q1, q2)
            assert abs(lhs - rhs) <= 5.0 / g.n
