import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import factorial2
from scipy.stats import norm

from skstein import gaussian_tools as gt
from skstein.errors import NumericFailure


@given(st.integers(1, 60), st.integers(0, 12))
def test_gauss_hermite_moments(order, k):
    rule = gt.gauss_hermite(order)
    if 2 * k >= 2 * order:
        return
    even = rule.expect(lambda z: z ** (2 * k))
    expected = factorial2(2 * k - 1) if k else 1.0
    assert even == pytest.approx(expected, rel=1e-11)
    assert abs(rule.expect(lambda z: z ** (2 * k + 1))) < 1e-9 * max(expected, 1)


def test_rule_is_symmetric():
    rule = gt.gauss_hermite(64)
    assert np.array_equal(rule.nodes, -rule.nodes[::-1])
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("order", [0, 257, -3])
def test_order_bounds(order):
    with pytest.raises(ValueError):
        gt.gauss_hermite(order)


def test_shifted_expectation():
    rule = gt.gauss_hermite(40)
    assert gt.gaussian_expectation(np.cos, rule, 0.7, 1.5) == pytest.approx(
        np.cos(0.7) * np.exp(-1.5**2 / 2), abs=1e-14)


def test_non_finite_integrand():
    with pytest.raises(NumericFailure):
        gt.gaussian_expectation(lambda z: np.full_like(z, np.inf), gt.gauss_hermite(4))


@given(st.floats(-3, 3), st.floats(0.2, 3), st.floats(-4, 4))
def test_piecewise_indicator(mean, std, t):
    got = gt.gaussian_expectation_piecewise(lambda x: (x <= t).astype(float), mean, std, breaks=(t,))
    assert got == pytest.approx(norm.cdf((t - mean) / std), abs=1e-13)


def test_legendre_panels_integrate_polynomials():
    nodes, weights = gt.legendre_panels([0.0, 0.5, 2.0], order=4)
    assert weights @ nodes**7 == pytest.approx(2.0**8 / 8, rel=1e-13)


@pytest.mark.parametrize("f,fp", [(np.sin, np.cos), (np.tanh, lambda x: 1 - np.tanh(x) ** 2),
                                  (lambda x: x**2, lambda x: 2 * x)])
def test_integration_by_parts(f, fp):
    res = gt.ibp_residual(f, fp, 100000, 3)
    assert res.residual <= 4 * res.stderr



@pytest.mark.parametrize("family,expected", [
    (gt.constant_family([0.5, -1.0, 2.0]), 0.25 + 1.0 + 4.0),
    (gt.identity_family(5), 10.0),
    (gt.shift_family(6), 6.0),
])
def test_lemma_analytic_families(family, expected):
    sides = gt.approximation_lemma_sides(family, 100000, 1)
    assert sides.agrees(4)
    assert abs(sides.lhs - expected) <= 4 * sides.lhs_stderr + 1e-12
    assert abs(sides.rhs - expected) <= 4 * sides.rhs_stderr + 1e-12


def test_lemma_tanh_family():
    a = np.random.default_rng(0).normal(size=(4, 4)) * 0.7
    fam = gt.tanh_linear_family(a, np.array([0.1, -0.2, 0.3, 0.0]))
    pts = np.random.default_rng(1).normal(size=(10, 4))
    assert fam.gradient_error(pts) < 1e-8
    assert gt.approximation_lemma_sides(fam, 100000, 2).agrees(4)


def test_lemma_detects_wrong_jacobian():
    bad = gt.SmoothFieldFamily(3, lambda g: np.array(g, dtype=float),
                               lambda g: np.zeros(np.shape(g) + (3,)), name="bad")
    sides = gt.approximation_lemma_sides(bad, 100000, 1)
    assert not sides.agrees(4)
    assert bad.gradient_error(np.zeros((1, 3))) == pytest.approx(1.0)


def test_lemma_runtime():
    start = time.perf_counter()
    for fam in (gt.constant_family([1.0, 2.0]), gt.identity_family(8), gt.shift_family(8)):
        gt.approximation_lemma_sides(fam, 100000, 0)
    assert time.perf_counter() - start < 60


def test_lemma_needs_samples():
    with pytest.raises(ValueError):
        gt.approximation_lemma_sides(gt.identity_family(2), 999, 0)


def test_constant_family_has_no_jacobian():
    fam = gt.constant_family([1.0, 2.0])
    g = np.ones((3, 2))
    assert fam.values(g).shape == (3, 2)
    assert np.all(fam.jacobian(g) == 0)
