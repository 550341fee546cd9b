"""
numerics_test.py

Tests for the quadrature, spline, root-finding and tridiagonal kernels.
"""
import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import norm

from errors import BracketError, ParameterError, SingularSystemError
from numerics import (BicubicSpline2D, BrokenCubicSpline, CubicSpline1D, UniformCubicRows, bicubic_eval, find_root,
                      gauss_hermite, normal_partial_moments, spline_build, spline_eval, spline_normal_moments,
                      tridiag_solve, uniform_spline_expectations)


def normal_moment(k):
    return 0.0 if k % 2 else float(np.prod(np.arange(k - 1, 0, -2))) if k else 1.0


@pytest.mark.parametrize("q", [1, 2, 5, 9])
def test_gauss_hermite_integrates_polynomials_exactly(q):
    rule = gauss_hermite(q)
    for k in range(2 * q):
        expected = normal_moment(k)
        assert rule.expect_normal(lambda z: z ** k) == pytest.approx(expected, rel=1e-9, abs=1e-6)


def test_gauss_hermite_is_symmetric_and_normalised():
    rule = gauss_hermite(9)
    assert np.array_equal(rule.nodes, -rule.nodes[::-1])
    assert np.array_equal(rule.weights, rule.weights[::-1])
    assert rule.normal_weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert rule.nodes[4] == 0.0


def test_gauss_hermite_single_point_rule():
    rule = gauss_hermite(1)
    assert rule.nodes.tolist() == [0.0]
    assert rule.normal_weights[0] == pytest.approx(1.0)


@pytest.mark.parametrize("q", [0, 65, 2.5, True, "9"])
def test_gauss_hermite_rejects_bad_orders(q):
    with pytest.raises(ParameterError):
        gauss_hermite(q)


def test_gauss_hermite_arrays_are_read_only():
    rule = gauss_hermite(5)
    with pytest.raises(ValueError):
        rule.nodes[0] = 1.0


def test_lognormal_expectation():
    rule = gauss_hermite(20)
    s = 0.2
    assert rule.expect_normal(lambda z: np.exp(s * z)) == pytest.approx(math.exp(0.5 * s * s), rel=1e-12)


def test_spline_interpolates_knots_and_reproduces_lines():
    knots = np.array([0.0, 0.5, 1.5, 2.0, 4.0])
    spline = spline_build(knots, 3.0 * knots - 1.0)
    x = np.array([-2.0, 0.0, 0.3, 1.7, 4.0, 9.0])
    assert np.allclose(spline_eval(spline, x), 3.0 * x - 1.0, atol=1e-12)


def test_spline_is_natural():
    knots = np.linspace(0.0, 3.0, 7)
    spline = CubicSpline1D(knots, np.sin(knots))
    d2 = spline.second_derivatives
    assert d2[0] == pytest.approx(0.0, abs=1e-12)
    assert d2[-1] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(spline(knots), np.sin(knots))


def test_spline_extrapolates_along_end_tangent():
    knots = np.linspace(0.0, 1.0, 11)
    spline = CubicSpline1D(knots, knots ** 2)
    slope = (spline(1.0 + 1e-7) - spline(1.0)) / 1e-7
    assert spline(3.0) == pytest.approx(1.0 + 2.0 * slope, rel=1e-6)


def test_spline_handles_value_columns():
    knots = np.linspace(0.0, 2.0, 9)
    values = np.stack([knots, 2.0 * knots, np.ones_like(knots)], axis=1)
    spline = CubicSpline1D(knots, values)
    out = spline(np.array([[0.25, 3.0]]))
    assert out.shape == (1, 2, 3)
    assert np.allclose(out[0, 0], [0.25, 0.5, 1.0])
    assert np.allclose(out[0, 1], [3.0, 6.0, 1.0])


@pytest.mark.parametrize("knots, values", [
    ([0.0, 1.0], [0.0, 1.0]),
    ([0.0, 1.0, 1.0], [0.0, 1.0, 2.0]),
    ([0.0, 1.0, 2.0], [0.0, 1.0]),
])
def test_spline_rejects_bad_knots(knots, values):
    with pytest.raises(ParameterError):
        CubicSpline1D(knots, values)


def test_broken_spline_reproduces_a_kink_on_its_break():
    knots = np.linspace(-1.0, 1.0, 21)
    spline = BrokenCubicSpline(knots, np.stack([np.abs(knots), np.abs(knots)], axis=1), breaks=[10, -1])
    x = np.array([-0.73, -0.05, 0.05, 0.61])
    assert np.allclose(spline(x)[:, 0], np.abs(x), atol=1e-12)
    assert np.max(np.abs(spline(x)[:, 1] - np.abs(x))) > 1e-3
    assert spline.split_columns == 1


def test_broken_spline_ignores_breaks_near_the_ends():
    knots = np.linspace(0.0, 1.0, 11)
    spline = BrokenCubicSpline(knots, np.stack([knots ** 2] * 3, axis=1), breaks=[2, 5, 8])
    assert spline.split_columns == 1
    assert np.allclose(spline(knots), np.stack([knots ** 2] * 3, axis=1), atol=1e-12)
    # Outside the knots the end values hold
    assert np.allclose(spline(-0.5), 0.0) and np.allclose(spline(1.5), 1.0)


def test_broken_spline_needs_a_value_matrix():
    with pytest.raises(ParameterError):
        BrokenCubicSpline(np.linspace(0.0, 1.0, 5), np.zeros(5))


def test_partial_moments_of_the_whole_line():
    mean, sd = 0.3, 1.7
    moments = normal_partial_moments(-np.inf, np.inf, mean, sd, 4)
    expected = [1.0, mean, mean ** 2 + sd ** 2, mean ** 3 + 3 * mean * sd ** 2,
                mean ** 4 + 6 * mean ** 2 * sd ** 2 + 3 * sd ** 4]
    assert moments == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("lo, hi, mean, sd", [
    (0.0, 0.02, -0.3, 0.1),
    (-1.0, 2.5, 0.4, 0.7),
    (3.0, np.inf, 0.0, 1.0),
    (0.0, 0.05, 0.6, 0.08),
])
def test_partial_moments_match_numerical_integration(lo, hi, mean, sd):
    moments = normal_partial_moments(lo, hi, mean, sd, 5)
    for p in range(6):
        expected, _ = integrate.quad(lambda u: u ** p * norm.pdf(u, mean, sd), lo, hi, epsabs=0.0, epsrel=1e-13)
        assert moments[p] == pytest.approx(expected, rel=1e-8)


def test_partial_moments_split_additively():
    whole = normal_partial_moments(-np.inf, np.inf, -0.2, 0.5, 3)
    cuts = np.array([-np.inf, -1.0, -0.1, 0.4, np.inf])
    parts = normal_partial_moments(cuts[:-1], cuts[1:], -0.2, 0.5, 3)
    assert parts.sum(axis=1) == pytest.approx(whole, rel=1e-12, abs=1e-15)


def test_partial_moments_need_a_positive_sd():
    with pytest.raises(ParameterError):
        normal_partial_moments(0.0, 1.0, 0.0, 0.0, 2)


def piecewise_reference(spline, centre, sd, column, power=0):
    # E[S(U) Z^power; knots[0] <= U < knots[-1]], U ~ N(centre, sd^2), one adaptive integral per piece
    knots = spline.knots
    total = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        part, _ = integrate.quad(lambda u: spline(u)[column] * ((u - centre) / sd) ** power * norm.pdf(u, centre, sd),
                                 lo, hi, epsabs=1e-14, epsrel=1e-12)
        total += part
    return total


@pytest.fixture(scope='module')
def kinked_spline():
    knots = np.linspace(-2.0, 2.0, 41)
    values = np.stack([np.sin(2.0 * knots), np.maximum(knots, 0.3)], axis=1)
    return BrokenCubicSpline(knots, values, breaks=[-1, 23])


def test_uniform_spline_expectations_are_exact(kinked_spline):
    mean, sd = 0.05, 0.17
    inside = uniform_spline_expectations(kinked_spline.coefficients, 0.1, mean, sd)
    assert inside.shape == (41, 2)
    for i in (0, 7, 20, 23, 33, 40):
        for column in (0, 1):
            expected = piecewise_reference(kinked_spline, kinked_spline.knots[i] + mean, sd, column)
            assert inside[i, column] == pytest.approx(expected, abs=1e-10)


def test_spline_normal_moments_off_the_knots(kinked_spline):
    x0, mean, sd = 0.037, -0.02, 0.3
    moments = spline_normal_moments(kinked_spline.coefficients, kinked_spline.knots, x0, mean, sd, 2)
    assert moments.shape == (3, 2)
    for power in range(3):
        for column in (0, 1):
            expected = piecewise_reference(kinked_spline, x0 + mean, sd, column, power)
            assert moments[power, column] == pytest.approx(expected, abs=1e-10)


def test_single_point_and_all_knot_expectations_agree(kinked_spline):
    inside = uniform_spline_expectations(kinked_spline.coefficients, 0.1, 0.01, 0.25)
    at_knot = spline_normal_moments(kinked_spline.coefficients, kinked_spline.knots, kinked_spline.knots[17], 0.01,
                                    0.25, 0)
    assert at_knot[0] == pytest.approx(inside[17], abs=1e-12)


def test_uniform_rows_hit_nodes():
    grid = np.linspace(-1.0, 2.0, 13)
    values = np.vstack([np.exp(grid), grid ** 3])
    rows = UniformCubicRows(grid[0], grid[1] - grid[0], values)
    assert np.allclose(rows(np.array([0, 1]), grid[[3, 12]]), [np.exp(grid[3]), grid[12] ** 3])


def test_bicubic_node_identity():
    x = np.linspace(0.0, 1.0, 6)
    y = np.linspace(-1.0, 1.0, 5)
    values = np.random.default_rng(7).normal(size=(5, 6))
    surface = BicubicSpline2D(x, y, values)
    xx, yy = np.meshgrid(x, y)
    assert np.allclose(surface(xx, yy), values, atol=1e-12)


def test_bicubic_reproduces_planes_inside_and_outside():
    x = np.linspace(0.0, 2.0, 9)
    y = np.linspace(1.0, 3.0, 7)
    xx, yy = np.meshgrid(x, y)
    surface = BicubicSpline2D(x, y, 2.0 * xx - 0.5 * yy + 1.0)
    px = np.array([0.13, 1.77, -0.5, 2.6, 1.0])
    py = np.array([1.4, 2.9, 2.0, 3.5, 0.2])
    assert np.allclose(bicubic_eval(surface, px, py), 2.0 * px - 0.5 * py + 1.0, atol=1e-12)


def test_bicubic_accuracy_on_smooth_surface():
    x = np.linspace(0.0, 2.0, 101)
    y = np.linspace(0.0, 2.0, 101)
    xx, yy = np.meshgrid(x, y)
    surface = BicubicSpline2D(x, y, np.sin(xx) * np.cos(yy))
    px = np.random.default_rng(3).uniform(0.0, 2.0, 1000)
    py = np.random.default_rng(4).uniform(0.0, 2.0, 1000)
    assert np.max(np.abs(surface(px, py) - np.sin(px) * np.cos(py))) < 1e-6


def test_bicubic_requires_uniform_grid():
    with pytest.raises(ParameterError):
        BicubicSpline2D([0.0, 1.0, 3.0, 4.0], np.linspace(0.0, 1.0, 4), np.zeros((4, 4)))


def test_find_root():
    root = find_root(lambda x: math.cos(x) - x, 0.0, 1.0)
    assert root == pytest.approx(0.7390851332151607, abs=1e-11)


def test_find_root_returns_zero_endpoint():
    assert find_root(lambda x: x - 2.0, 2.0, 5.0) == 2.0


def test_find_root_without_sign_change():
    with pytest.raises(BracketError) as info:
        find_root(lambda x: x * x + 1.0, -1.0, 1.0)
    assert info.value.f_lo == pytest.approx(2.0)


def test_tridiag_solve_matches_dense_solve():
    rng = np.random.default_rng(11)
    n = 8
    sub, sup = rng.uniform(-1, 1, n - 1), rng.uniform(-1, 1, n - 1)
    diag = 4.0 + rng.uniform(0, 1, n)
    rhs = rng.normal(size=(n, 3))
    dense = np.diag(diag) + np.diag(sub, -1) + np.diag(sup, 1)
    assert np.allclose(tridiag_solve(sub, diag, sup, rhs), np.linalg.solve(dense, rhs))


def test_tridiag_solve_singular():
    with pytest.raises(SingularSystemError):
        tridiag_solve(np.zeros(3), np.zeros(4), np.zeros(3), np.ones(4))
