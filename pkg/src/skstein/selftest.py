"""Exact identities of the mixture family, the Stein solver, q and the Gibbs measure.

Each check returns the worst observed error next to its tolerance.
"""

from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize
from scipy.special import erfcx

from . import rng
from .battery import make_test_function
from .gaussian_tools import gaussian_expectation_piecewise
from .mixture_stein import (
    MixtureGaussianParams,
    decompose,
    density,
    onsager_identity_check,
    score,
    solve_stein,
    tanh_moment,
    tanh_moment_quadrature,
)
from .sk_model import ModelParams, build_exact_gibbs, callen_identity_residual, sample_disorder
from .tap_solver import q_fixed_point, q_map

STEIN_PARAMS = MixtureGaussianParams(0.25, 0.3, 0.1, 0.96)


class Check(NamedTuple):
    name: str
    value: float
    tolerance: float

    @property
    def passed(self):
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)


def random_mixture_grid(count=50, seed=0):
    gen = rng.generator(seed, rng.MONTE_CARLO, 10)
    return [
        MixtureGaussianParams(float(gen.uniform(-2, 2)), float(gen.uniform(-2, 2)),
                              float(gen.uniform(-3, 3)), float(gen.uniform(0.25, 4)))
        for _ in range(count)
    ]


def _normal_pdf(x, m, s2):
    return np.exp(-((x - m) ** 2) / (2 * s2)) / np.sqrt(2 * np.pi * s2)


def check_normalization(grid):
    worst = 0.0
    for p in grid:
        s = p.sigma
        lo = p.mu - abs(p.a) * p.sigma2 - 14 * s
        hi = p.mu + abs(p.a) * p.sigma2 + 14 * s
        dec = decompose(p)
        val, _ = integrate.quad(lambda x: float(density(p, x)), lo, hi, limit=500,
                                points=[dec.mean_minus, dec.mean_plus], epsabs=1e-14, epsrel=1e-13)
        worst = max(worst, abs(val - 1.0))
    return Check("mixture normalization", worst, 1e-10)


def check_decomposition(grid):
    worst = 0.0
    for p in grid:
        dec = decompose(p)
        x = np.linspace(p.mu - 6 * p.sigma - abs(p.a) * p.sigma2,
                        p.mu + 6 * p.sigma + abs(p.a) * p.sigma2, 201)
        mix = dec.p * _normal_pdf(x, dec.mean_plus, p.sigma2) + (1 - dec.p) * _normal_pdf(
            x, dec.mean_minus, p.sigma2)
        worst = max(worst, float(np.max(np.abs(density(p, x) - mix))))
    return Check("mixture decomposition", worst, 1e-13)


def check_tanh_identity(grid):
    worst = max(abs(tanh_moment_quadrature(p) - tanh_moment(p)) for p in grid)
    return Check("tanh identity", worst, 1e-8)


def onsager_grid(count=20, seed=0):
    gen = rng.generator(seed, rng.MONTE_CARLO, 11)
    cases = []
    for _ in range(count):
        mu2 = float(gen.uniform(-2, 1))
        mu1 = mu2 + float(gen.uniform(0.1, 3))
        cases.append((float(gen.uniform(0.05, 0.95)), mu1, mu2, float(gen.uniform(0.25, 2))))
    return cases


def check_onsager(cases):
    worst = 0.0
    for case in cases:
        lhs, rhs = onsager_identity_check(*case)
        worst = max(worst, abs(lhs - rhs))
    return Check("Onsager identity", worst, 1e-8)


def characterizing_battery(params):
    """(f, f') pairs whose T f must average to zero under M(params)."""
    a, b = params.a, params.b
    return [
        ("1", lambda x: np.ones_like(x), lambda x: np.zeros_like(x)),
        ("x", lambda x: x, lambda x: np.ones_like(x)),
        ("x^2", lambda x: x**2, lambda x: 2 * x),
        ("sin", np.sin, np.cos),
        ("tanh(ax+b)", lambda x: np.tanh(a * x + b), lambda x: a / np.cosh(a * x + b) ** 2),
        ("exp(-x^2)", lambda x: np.exp(-(x**2)), lambda x: -2 * x * np.exp(-(x**2))),
    ]


def stein_expectation(params, f, fprime):
    """E[T f(X)] for X ~ M(params), integrated component by component."""
    dec = decompose(params)
    s = params.sigma
    width = s if params.a == 0 else min(s, 0.5 / abs(params.a))

    def tf(x):
        return fprime(x) - score(params, x) * f(x)

    plus = gaussian_expectation_piecewise(tf, dec.mean_plus, s, width=width)
    minus = gaussian_expectation_piecewise(tf, dec.mean_minus, s, width=width)
    return dec.p * plus + (1 - dec.p) * minus


CHARACTERIZING_PARAMS = (
    STEIN_PARAMS,
    MixtureGaussianParams(0.0, 0.0, 0.0, 1.0),
    MixtureGaussianParams(1.0, 0.5, -0.3, 1.44),
    MixtureGaussianParams(-1.5, 0.7, 0.4, 0.5),
)


def check_characterizing(params_list=CHARACTERIZING_PARAMS):
    worst = 0.0
    for params in params_list:
        for _, f, fp in characterizing_battery(params):
            worst = max(worst, abs(stein_expectation(params, f, fp)))
    return Check("Stein characterizing property", worst, 1e-8)


def check_ode_residual(params=STEIN_PARAMS, points=1000):
    u = make_test_function("tanh", 0.25, 0.3)
    sol = solve_stein(params, u)
    x = np.linspace(params.mu - 8 * params.sigma, params.mu + 8 * params.sigma, points)
    return Check("Stein ODE residual", float(np.max(sol.ode_residual(x))), 1e-8)


def gaussian_indicator_solution(x):
    """Closed-form Stein solution for N(0,1) and u = 1{x <= 0}: sqrt(2 pi)/2 e^{x^2/2} Phi(-|x|)."""
    x = np.asarray(x, dtype=float)
    return 0.5 * np.sqrt(2 * np.pi) * 0.5 * erfcx(np.abs(x) / np.sqrt(2))


def check_gaussian_solution(points=1000):
    sol = solve_stein(MixtureGaussianParams(0.0, 0.0, 0.0, 1.0), make_test_function("indicator:0"))
    x = np.linspace(-8, 8, points)
    return Check("Gaussian Stein solution", float(np.max(np.abs(sol(x) - gaussian_indicator_solution(x)))),
                 1e-8)


def check_f_mu(params=STEIN_PARAMS, points=201):
    sol = solve_stein(params, make_test_function("tanh", 0.25, 0.3))
    x = np.linspace(params.mu - 6 * params.sigma, params.mu + 6 * params.sigma, points)
    step = 1e-5 * params.sigma
    fd = (sol.evaluate(x, params.mu + step).f - sol.evaluate(x, params.mu - step).f) / (2 * step)
    return Check("df/dmu vs finite difference", float(np.max(np.abs(fd - sol.evaluate(x).f_mu))), 1e-5)


def check_q():
    worst_zero = max(q_fixed_point(b, 0.0).q for b in np.linspace(0, 1, 11))
    worst_beta0 = max(abs(q_fixed_point(0.0, h).q - np.tanh(h) ** 2) for h in (0.1, 0.5, 1.0, -0.7))
    beta, h = 0.3, 0.5
    root = optimize.bisect(lambda q: q - q_map(beta, h, q), 0.0, 1.0 - 1e-12, xtol=1e-15, rtol=1e-15)
    bisect_gap = abs(q_fixed_point(beta, h).q - root)
    return [
        Check("q(beta, 0) = 0 for beta <= 1", worst_zero, 0.0),
        Check("q(0, h) = tanh^2 h", worst_beta0, 1e-12),
        Check("q iteration vs bisection", bisect_gap, 1e-10),
    ]


def check_callen(cases=100, seed=0):
    gen = rng.generator(seed, rng.MONTE_CARLO, 12)
    worst = 0.0
    for case in range(cases):
        n = int(gen.integers(2, 13))
        params = ModelParams(n, float(gen.uniform(0, 1)), float(gen.uniform(-1, 1)))
        disorder = sample_disorder(n, rng.derive_seed(seed, case))
        table = build_exact_gibbs(params, disorder)
        worst = max(worst, max(callen_identity_residual(table, disorder, i) for i in range(n)))
    return Check("Callen identity", worst, 1e-12)


def run_all(seed=0):
    grid = random_mixture_grid(50, seed)
    return [
        check_callen(100, seed),
        check_normalization(grid),
        check_decomposition(grid),
        check_tanh_identity(grid),
        check_onsager(onsager_grid(20, seed)),
        check_characterizing(),
        check_ode_residual(),
        check_gaussian_solution(),
        check_f_mu(),
        *check_q(),
    ]
