import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from skstein import mixture_stein as ms
from skstein.battery import DEFAULT_BATTERY, make_battery, make_test_function
from skstein.mixture_stein import MixtureGaussianParams

params_st = st.builds(MixtureGaussianParams, st.floats(-2, 2), st.floats(-2, 2), st.floats(-3, 3),
                      st.floats(0.25, 4))


def quad_expect(params, fn):
    dec = ms.decompose(params)
    span = 14 * params.sigma + abs(params.a) * params.sigma2
    val, _ = integrate.quad(lambda x: fn(x) * float(ms.density(params, x)), params.mu - span,
                            params.mu + span, points=[dec.mean_minus, dec.mean_plus], limit=400,
                            epsabs=1e-13)
    return val


@given(params_st)
def test_density_normalised_and_mean(params):
    assert quad_expect(params, lambda x: 1.0) == pytest.approx(1.0, abs=1e-10)
    assert quad_expect(params, lambda x: x) == pytest.approx(ms.mean(params), abs=1e-8)


@given(params_st)
def test_decomposition_roundtrip(params):
    dec = ms.decompose(params)
    assume(1e-9 < dec.p < 1 - 1e-9 and params.a > 1e-3)
    back = ms.from_two_gaussians(dec.p, dec.mean_plus, dec.mean_minus, dec.sigma2)
    for x, y in zip((back.a, back.b, back.mu, back.sigma2), (params.a, params.b, params.mu, params.sigma2)):
        assert x == pytest.approx(y, abs=1e-9)


def test_decomposition_example():
    dec = ms.decompose(MixtureGaussianParams(1.0, 0.0, 0.0, 1.0))
    assert (dec.p, dec.mean_plus, dec.mean_minus) == (0.5, 1.0, -1.0)


@given(params_st)
def test_tanh_moment(params):
    assert ms.tanh_moment_quadrature(params) == pytest.approx(ms.tanh_moment(params), abs=1e-8)


@given(st.floats(0.05, 0.95), st.floats(-2, 1), st.floats(0.1, 3), st.floats(0.25, 2))
def test_onsager_identity(p, mu2, gap, s2):
    lhs, rhs = ms.onsager_identity_check(p, mu2 + gap, mu2, s2)
    assert abs(lhs - rhs) <= 1e-8


def test_onsager_rejects_order():
    with pytest.raises(ValueError):
        ms.onsager_identity_check(0.5, 0.0, 1.0, 1.0)


@pytest.mark.parametrize("s2", [0.0, -1.0, float("inf")])
def test_bad_variance(s2):
    with pytest.raises(ValueError):
        MixtureGaussianParams(0.1, 0.0, 0.0, s2)


@given(params_st, st.floats(-3, 3))
def test_indicator_expectation_closed_form(params, t):
    dec = ms.decompose(params)
    s = params.sigma
    expected = dec.p * norm.cdf((t - dec.mean_plus) / s) + (1 - dec.p) * norm.cdf((t - dec.mean_minus) / s)
    got = ms.expectation(params, make_test_function(f"indicator:{t}"))
    assert got == pytest.approx(expected, abs=1e-12)


@given(params_st)
def test_smooth_expectation_against_quad(params):
    assert ms.expectation(params, np.sin) == pytest.approx(quad_expect(params, np.sin), abs=1e-9)


def test_quadrature_sample_moments():
    params = MixtureGaussianParams(0.7, -0.2, 0.4, 1.3)
    x, w = ms.quadrature_sample(params)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert w @ x == pytest.approx(ms.mean(params), abs=1e-12)


def test_sampler_moments():
    params = MixtureGaussianParams(0.8, 0.3, -0.5, 0.7)
    dec = ms.decompose(params)
    x = ms.sample(params, 200000, 4)
    var = params.sigma2 + 4 * dec.p * (1 - dec.p) * (params.a * params.sigma2) ** 2
    assert abs(x.mean() - ms.mean(params)) <= 4 * np.sqrt(var / x.size)
    assert abs(x.var() - var) <= 4 * var * np.sqrt(3 / x.size)


def standard_indicator_solution(x, t):
    """Stein solution of f' - x f = 1{x <= t} - Phi(t) for the standard normal."""
    x = np.asarray(x, dtype=float)
    scale = np.sqrt(2 * np.pi) * np.exp(x**2 / 2)
    return np.where(x <= t, scale * norm.cdf(x) * norm.sf(t), scale * norm.cdf(t) * norm.sf(x))


@pytest.mark.parametrize("t", [0.0, 0.5, -1.2])
def test_gaussian_closed_form(t):
    sol = ms.solve_stein(MixtureGaussianParams(0, 0, 0, 1), make_test_function(f"indicator:{t}"))
    x = np.linspace(-4, 4, 801)
    np.testing.assert_allclose(sol(x), standard_indicator_solution(x, t), atol=1e-10)


def test_gaussian_value_at_origin():
    sol = ms.solve_stein(MixtureGaussianParams(0, 0, 0, 1), make_test_function("indicator:0"))
    assert float(sol(0.0)) == pytest.approx(np.sqrt(2 * np.pi) / 4, abs=1e-12)


@given(st.floats(-2, 2), st.floats(0.3, 3), st.floats(-2, 2))
def test_gaussian_rescaling(mu, s2, t):
    # f(x) = sigma g((x - mu)/sigma), g the standard solution at threshold (t - mu)/sigma
    sol = ms.solve_stein(MixtureGaussianParams(0, 0, mu, s2), make_test_function(f"indicator:{t}"))
    s = np.sqrt(s2)
    z = np.linspace(-3, 3, 61)
    np.testing.assert_allclose(sol(mu + s * z), s * standard_indicator_solution(z, (t - mu) / s),
                               atol=1e-9)


@given(params_st, st.sampled_from(["tanh", "sin", "cos", "sigmoid"]))
def test_ode_residual_random(params, name):
    sol = ms.solve_stein(params, make_test_function(name, 0.25, 0.3))
    x = np.linspace(params.mu - 6 * params.sigma, params.mu + 6 * params.sigma, 101)
    assert np.max(sol.ode_residual(x)) <= 1e-7


@given(params_st, st.sampled_from(list(DEFAULT_BATTERY)))
def test_solution_bounded(params, name):
    u = make_test_function(name, 0.25, 0.3)
    sol = ms.solve_stein(params, u)
    grid = np.linspace(params.mu - 30, params.mu + 30, 601)
    v = sol.evaluate(grid)
    for arr in v:
        assert np.all(np.isfinite(arr))
    assert sol.bound_constant(grid) < 1e4


def test_solution_decays_in_tails():
    params = MixtureGaussianParams(0.25, 0.3, 0.1, 0.96)
    sol = ms.solve_stein(params, make_test_function("tanh", 0.25, 0.3))
    assert np.all(np.abs(sol(np.array([-40.0, 40.0]))) < 0.1)


def test_indicator_ode_away_from_jump():
    params = MixtureGaussianParams(0.5, 0.0, 0.0, 1.0)
    sol = ms.solve_stein(params, make_test_function("indicator:0.5"))
    x = np.concatenate([np.linspace(-5, 0.4, 200), np.linspace(0.6, 5, 200)])
    assert np.max(sol.ode_residual(x, step=1e-3)) <= 1e-7


def test_f_mu_finite_difference():
    params = MixtureGaussianParams(1.0, -0.4, 0.3, 0.8)
    sol = ms.solve_stein(params, make_test_function("sin"))
    x = np.linspace(-3, 3, 41)
    eps = 1e-5
    fd = (sol.evaluate(x, 0.3 + eps).f - sol.evaluate(x, 0.3 - eps).f) / (2 * eps)
    np.testing.assert_allclose(sol.evaluate(x).f_mu, fd, atol=1e-6)


def test_r_matches_expectation():
    params = MixtureGaussianParams(0.6, 0.1, -0.2, 1.1)
    u = make_test_function("cos")
    sol = ms.solve_stein(params, u)
    assert sol.r() == pytest.approx(ms.expectation(params, u), abs=1e-12)
    assert sol.r(0.5) == pytest.approx(ms.expectation(sol.at(0.5), u), abs=1e-12)
    eps = 1e-5
    assert sol.r_prime() == pytest.approx((sol.r(-0.2 + eps) - sol.r(-0.2 - eps)) / (2 * eps), abs=1e-7)


def test_characterizing_property_via_stein_apply():
    params = MixtureGaussianParams(1.0, 0.5, -0.3, 1.44)
    x, w = ms.quadrature_sample(params, 128)
    # T applied to the constant 1 averages to zero exactly when the tanh identity holds
    tf = ms.stein_apply(params, np.ones_like, x, fprime=np.zeros_like)
    assert abs(w @ tf) < 1e-8


def test_stein_discrepancy_zero_under_target():
    params = MixtureGaussianParams(0.25, 0.3, 0.1, 0.96)
    x, w = ms.quadrature_sample(params)
    battery = make_battery(["tanh", "sin", "cos", "sigmoid"], 0.25, 0.3)
    assert ms.stein_discrepancy(params, x, w, battery) < 1e-10


def test_stein_discrepancy_detects_other_law():
    params = MixtureGaussianParams(0.0, 0.0, 0.0, 1.0)
    x, w = ms.quadrature_sample(MixtureGaussianParams(0.0, 0.0, 1.0, 1.0))
    u = make_test_function("sin")
    # T f_u = u - E u, so the discrepancy is |E_other sin - E_target sin|
    expected = abs(np.sin(1.0) * np.exp(-0.5) - 0.0)
    assert ms.stein_discrepancy(params, x, w, [u]) == pytest.approx(expected, abs=1e-10)


def test_stein_discrepancy_weights():
    params = MixtureGaussianParams(0.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        ms.stein_discrepancy(params, np.zeros(3), np.full(3, 0.3), [np.sin])


def test_battery_names():
    battery = make_battery(DEFAULT_BATTERY, 0.25, 0.3)
    assert [u.name for u in battery] == list(DEFAULT_BATTERY)
    assert battery[0](0.0) == pytest.approx(np.tanh(0.3))
    assert battery[4].discontinuities == (0.0,)
    assert battery[5](np.array([0.5, 0.50001])).tolist() == [1.0, 0.0]
    with pytest.raises(ValueError):
        make_test_function("exp")
    with pytest.raises(ValueError):
        make_test_function("indicator:x")


def test_point_mass_identity_function():
    # T x at x = mu = 0 for the standard normal: 1 - 0 * 0
    params = MixtureGaussianParams(0.0, 0.0, 0.0, 1.0)
    val = ms.stein_apply(params, lambda x: x, np.array([0.0]), fprime=np.ones_like)
    assert val[0] == 1.0
    assert ms.stein_apply(params, lambda x: x, np.array([0.0]))[0] == pytest.approx(1.0, abs=1e-10)


def test_stein_discrepancy_empirical_sample():
    params = MixtureGaussianParams(1.0, 0.5, -0.3, 1.44)
    x = ms.sample(params, 20000, 1)
    w = np.full(x.size, 1 / x.size)
    for u in make_battery(["sin", "cos", "sigmoid", "indicator:0"]):
        stderr = np.std(u(x)) / np.sqrt(x.size)
        assert ms.stein_discrepancy(params, x, w, [u]) <= 4 * stderr


def test_sampler_mean_million():
    params = MixtureGaussianParams(1.0, 0.5, -0.3, 1.44)
    x = ms.sample(params, 10**6, 0)
    assert abs(x.mean() - ms.mean(params)) <= 4 * x.std() / 1000
