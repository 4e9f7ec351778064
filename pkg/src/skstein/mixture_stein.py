"""Two-component Gaussian mixtures M(a, b, mu, sigma2) and their Stein equation.

The density of M(a, b, mu, sigma2) is proportional to
``cosh(a x + b) * exp(-(x - mu)^2 / (2 sigma2))``.  It is the mixture
``p N(mu + a sigma2, sigma2) + (1 - p) N(mu - a sigma2, sigma2)`` with
``p = logistic(2 (a mu + b))``, and it is characterised by the operator::

    T f(x) = f'(x) - ((x - mu) / sigma2 - a tanh(a x + b)) f(x)
"""

import logging
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import expit

from . import rng
from .gaussian_tools import (
    gauss_hermite,
    gaussian_expectation,
    gaussian_expectation_piecewise,
    legendre_panels,
)

log = logging.getLogger(__name__)

QUADRATURE_ORDER = 64


@dataclass(frozen=True)
class MixtureGaussianParams:
    a: float
    b: float
    mu: float
    sigma2: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError(f"sigma2 must be positive and finite, got {self.sigma2}")
        for name in ("a", "b", "mu"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def sigma(self):
        return float(np.sqrt(self.sigma2))


@dataclass(frozen=True)
class MixtureDecomposition:
    p: float
    mean_plus: float
    mean_minus: float
    sigma2: float


def logcosh(z):
    z = np.abs(z)
    return z + np.log1p(np.exp(-2.0 * z)) - np.log(2.0)


def log_normalizer(params: MixtureGaussianParams) -> float:
    """log Z with Z = sqrt(2 pi) sigma cosh(a mu + b) exp(a^2 sigma2 / 2)."""
    a, b, mu, s2 = params.a, params.b, params.mu, params.sigma2
    return float(0.5 * np.log(2 * np.pi * s2) + logcosh(a * mu + b) + 0.5 * a * a * s2)


def log_density(params: MixtureGaussianParams, x):
    x = np.asarray(x, dtype=float)
    return (logcosh(params.a * x + params.b) - (x - params.mu) ** 2 / (2 * params.sigma2)
            - log_normalizer(params))


def density(params: MixtureGaussianParams, x):
    return np.exp(log_density(params, x))


def decompose(params: MixtureGaussianParams) -> MixtureDecomposition:
    shift = params.a * params.sigma2
    p = float(expit(2.0 * (params.a * params.mu + params.b)))
    return MixtureDecomposition(p, params.mu + shift, params.mu - shift, params.sigma2)


def from_two_gaussians(p, mu1, mu2, sigma2) -> MixtureGaussianParams:
    """Inverse of ``decompose``: the M-parameters of p N(mu1) + (1-p) N(mu2)."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if not mu1 > mu2:
        raise ValueError("need mu1 > mu2")
    a = (mu1 - mu2) / (2 * sigma2)
    b = 0.5 * np.log(p / (1 - p)) - (mu1**2 - mu2**2) / (4 * sigma2)
    return MixtureGaussianParams(float(a), float(b), 0.5 * (mu1 + mu2), float(sigma2))


def mean(params: MixtureGaussianParams) -> float:
    return float(params.mu + np.tanh(params.a * params.mu + params.b) * params.a * params.sigma2)


def tanh_moment(params: MixtureGaussianParams) -> float:
    """Closed form of the integral of tanh(a x + b) against the density."""
    return float(np.tanh(params.a * params.mu + params.b))


def _panel_width(a, sigma):
    return sigma if a == 0 else min(sigma, 0.5 / abs(a))


def tanh_moment_quadrature(params: MixtureGaussianParams) -> float:
    """The same integral evaluated numerically, component by component."""
    dec = decompose(params)
    s = params.sigma
    width = _panel_width(params.a, s)

    def u(x):
        return np.tanh(params.a * x + params.b)

    plus = gaussian_expectation_piecewise(u, dec.mean_plus, s, width=width)
    minus = gaussian_expectation_piecewise(u, dec.mean_minus, s, width=width)
    return dec.p * plus + (1 - dec.p) * minus


def onsager_identity_check(p, mu1, mu2, sigma2):
    """Both sides of E tanh(aX + b) = tanh(a E X + b - (2p - 1) a^2 sigma2).

    X follows p N(mu1, sigma2) + (1 - p) N(mu2, sigma2), with a and b fixed by
    the mixture.  The left side is integrated numerically.
    """
    if not mu1 > mu2:
        raise ValueError("onsager_identity_check needs mu1 > mu2")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    a = (mu1 - mu2) / (2 * sigma2)
    b = 0.5 * np.log(p / (1 - p)) - (mu1**2 - mu2**2) / (4 * sigma2)
    s = np.sqrt(sigma2)
    width = _panel_width(a, s)

    def u(x):
        return np.tanh(a * x + b)

    lhs = (p * gaussian_expectation_piecewise(u, mu1, s, width=width)
           + (1 - p) * gaussian_expectation_piecewise(u, mu2, s, width=width))
    ex = p * mu1 + (1 - p) * mu2
    rhs = np.tanh(a * ex + b - (2 * p - 1) * a * a * sigma2)
    return float(lhs), float(rhs)


def _discontinuities(u, discontinuities):
    if discontinuities is None:
        discontinuities = getattr(u, "discontinuities", ())
    return tuple(sorted(float(d) for d in discontinuities))


def expectation(params: MixtureGaussianParams, u, discontinuities=None) -> float:
    """Integral of ``u`` against M(params).

    Smooth integrands use Gauss-Hermite of order 64 on each component;
    integrands with declared jumps use composite Gauss-Legendre split at
    the jumps.
    """
    disc = _discontinuities(u, discontinuities)
    dec = decompose(params)
    s = params.sigma
    if disc:
        plus = gaussian_expectation_piecewise(u, dec.mean_plus, s, breaks=disc)
        minus = gaussian_expectation_piecewise(u, dec.mean_minus, s, breaks=disc)
    else:
        rule = gauss_hermite(QUADRATURE_ORDER)
        plus = gaussian_expectation(u, rule, dec.mean_plus, s)
        minus = gaussian_expectation(u, rule, dec.mean_minus, s)
    return dec.p * plus + (1 - dec.p) * minus


def _expectation_panels(params: MixtureGaussianParams, u, discontinuities=()) -> float:
    """Integral of ``u`` against M(params) by composite Gauss-Legendre for every integrand.

    Accurate to rounding even where Gauss-Hermite is limited by complex
    singularities of ``u`` near the real axis.
    """
    dec = decompose(params)
    s = params.sigma
    width = _panel_width(params.a, s)
    plus = gaussian_expectation_piecewise(u, dec.mean_plus, s, breaks=discontinuities, width=width)
    minus = gaussian_expectation_piecewise(u, dec.mean_minus, s, breaks=discontinuities, width=width)
    return dec.p * plus + (1 - dec.p) * minus


def quadrature_sample(params: MixtureGaussianParams, order=QUADRATURE_ORDER):
    """Nodes and weights representing M(params) exactly for low-degree polynomials."""
    dec = decompose(params)
    rule = gauss_hermite(order)
    s = params.sigma
    points = np.concatenate([dec.mean_plus + s * rule.nodes, dec.mean_minus + s * rule.nodes])
    weights = np.concatenate([dec.p * rule.weights, (1 - dec.p) * rule.weights])
    return points, weights


def sample(params: MixtureGaussianParams, count, seed):
    """Draw ``count`` variates: a Bernoulli(p) component, then a Gaussian."""
    count = int(count)
    if count < 1:
        raise ValueError("count must be positive")
    dec = decompose(params)
    gen = rng.generator(seed, rng.MIXTURE, 0)
    plus = gen.random(count) < dec.p
    z = gen.standard_normal(count)
    return np.where(plus, dec.mean_plus, dec.mean_minus) + params.sigma * z


def _five_point(fn, x, step=1e-3):
    x = np.asarray(x, dtype=float)
    return (fn(x - 2 * step) - 8 * fn(x - step) + 8 * fn(x + step) - fn(x + 2 * step)) / (12 * step)


def score(params: MixtureGaussianParams, x):
    """The multiplier (x - mu)/sigma2 - a tanh(a x + b) appearing in T."""
    x = np.asarray(x, dtype=float)
    return (x - params.mu) / params.sigma2 - params.a * np.tanh(params.a * x + params.b)


def stein_apply(params: MixtureGaussianParams, f, x, fprime=None):
    """Evaluate T f at ``x``; ``fprime`` defaults to a five-point difference."""
    x = np.asarray(x, dtype=float)
    df = fprime(x) if fprime is not None else _five_point(f, x)
    return df - score(params, x) * f(x)


class SteinValues(NamedTuple):
    f: np.ndarray
    f_x: np.ndarray
    f_mu: np.ndarray


# grading of the integration range towards the evaluation point
_GRADES = np.array([1 / 64, 1 / 32, 1 / 16, 1 / 8, 1 / 4, 3 / 8, 1 / 2, 5 / 8, 3 / 4, 7 / 8, 1.0])
_PANEL_ORDER = 16


@dataclass(frozen=True)
class SteinSolution:
    """Bounded solution f(x, mu) of T f = u - r(mu) for the family M(a, b, mu, sigma2).

    ``r(mu)`` is the integral of ``u`` against M(a, b, mu, sigma2).  The
    solution is ``rho(x)^-1 * int_{-inf}^x rho (u - r)`` for ``x < mu`` and the
    equal right-tail form ``-rho(x)^-1 * int_x^inf rho (u - r)`` for
    ``x >= mu``; both are integrated with the ratio ``rho(t)/rho(x)`` formed in
    log space.
    """

    params: MixtureGaussianParams
    test_function: Callable = None
    discontinuities: tuple = ()
    sup_norm: float = 1.0

    def at(self, mu) -> MixtureGaussianParams:
        p = self.params
        return MixtureGaussianParams(p.a, p.b, float(mu), p.sigma2)

    def _u(self, x):
        return np.asarray(self.test_function(x), dtype=float)

    def r(self, mu=None) -> float:
        # the left and right tail forms of f meet at mu only if r is exact,
        # so r uses the composite rule rather than Gauss-Hermite
        mu = self.params.mu if mu is None else mu
        val = _expectation_panels(self.at(mu), self._u, self.discontinuities)
        if not np.isfinite(val):
            raise ValueError("test function is not integrable (r(mu) overflowed)")
        return val

    def r_prime(self, mu=None) -> float:
        """d r / d mu from the quotient of integrals against rho."""
        mu = self.params.mu if mu is None else mu
        m = self.at(mu)
        r = self.r(mu)
        moment = _expectation_panels(m, lambda t: (self._u(t) - r) * (t - mu), self.discontinuities)
        return moment / m.sigma2

    def evaluate(self, x, mu=None) -> SteinValues:
        """Return f, df/dx and df/dmu at the points ``x`` for the centre ``mu``."""
        mu = self.params.mu if mu is None else float(mu)
        a, b, s2 = self.params.a, self.params.b, self.params.sigma2
        s = np.sqrt(s2)
        x = np.asarray(x, dtype=float)
        shape = x.shape
        x = x.ravel()
        r = self.r(mu)
        rp = self.r_prime(mu)

        d = x - mu
        side = np.where(d < 0, -1.0, 1.0)
        t0 = 2 * abs(a) * s2 + 12 * s
        absd = np.abs(d)
        far = absd > 2 * abs(a) * s2
        safe = np.where(far, np.maximum(absd, 1e-200), 1.0)
        span = np.where(far, np.minimum(t0, 150 * s2 / safe), t0)
        width = s if a == 0 else min(s, 0.5 / abs(a))
        uniform = width * np.arange(1, int(np.ceil(t0 / width)) + 1)
        pieces = [np.zeros((x.size, 1)), span[:, None] * _GRADES,
                  np.minimum(uniform[None, :], span[:, None])]
        if self.discontinuities:
            tau_d = side[:, None] * (np.asarray(self.discontinuities)[None, :] - x[:, None])
            pieces.append(np.clip(tau_d, 0.0, span[:, None]))
        breaks = np.sort(np.concatenate(pieces, axis=1), axis=1)
        tau, w = legendre_panels(breaks, _PANEL_ORDER)

        t = x[:, None] + side[:, None] * tau
        log_k = (logcosh(a * t + b) - logcosh(a * x + b)[:, None]
                 - side[:, None] * d[:, None] * tau / s2 - tau**2 / (2 * s2))
        wk = w * np.exp(log_k)
        du = self._u(t) - r
        i0 = np.sum(wk * du, axis=1)
        i1 = np.sum(wk * (t - mu) * du, axis=1) / s2
        i2 = np.sum(wk, axis=1)

        f = -side * i0
        f_x = (d / s2 - a * np.tanh(a * x + b)) * f + self._u(x) - r
        f_mu = -d / s2 * f - side * i1 + side * rp * i2
        return SteinValues(f.reshape(shape), f_x.reshape(shape), f_mu.reshape(shape))

    def __call__(self, x, mu=None):
        return self.evaluate(x, mu).f

    def ode_residual(self, x, mu=None, step=1e-3):
        """|df/dx - score * f - (u - r)| with df/dx from a five-point difference of f."""
        mu = self.params.mu if mu is None else mu
        m = self.at(mu)
        x = np.asarray(x, dtype=float)
        df = _five_point(lambda y: self.evaluate(y, mu).f, x, step)
        return np.abs(df - score(m, x) * self.evaluate(x, mu).f - (self._u(x) - self.r(mu)))

    def bound_constant(self, grid, mu=None):
        """Observed sup |f|, |df/dx|, |df/dmu| over ``grid`` divided by the sup norm of u."""
        v = self.evaluate(grid, mu)
        c = max(float(np.max(np.abs(arr))) for arr in v) / self.sup_norm
        log.info("Stein solution bound: sup over grid / ||u|| = %.6g", c)
        if not np.isfinite(c):
            raise ValueError("Stein solution is not bounded on the grid")
        return c


def solve_stein(params: MixtureGaussianParams, u, discontinuities=None, sup_norm=None) -> SteinSolution:
    """Construct the bounded Stein-equation solution for test function ``u``."""
    disc = _discontinuities(u, discontinuities)
    points, _ = quadrature_sample(params)
    observed = float(np.max(np.abs(np.asarray(u(points), dtype=float))))
    if not np.isfinite(observed):
        raise ValueError("test function is unbounded on the quadrature nodes")
    if sup_norm is None:
        sup_norm = getattr(u, "sup_norm", None) or observed
    elif observed > sup_norm * (1 + 1e-12):
        log.warning("supplied sup norm %.6g is below the observed %.6g", sup_norm, observed)
    sol = SteinSolution(params, u, disc, float(sup_norm) if sup_norm > 0 else 1.0)
    sol.r()  # raises on overflow
    return sol


def stein_discrepancy(params: MixtureGaussianParams, points, weights, battery) -> float:
    """max over u in the battery of |sum_i w_i (T f_u)(x_i)| with f_u the Stein solution."""
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if points.shape != weights.shape:
        raise ValueError("points and weights must have the same shape")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("weights must sum to one")
    worst = 0.0
    for u in battery:
        sol = solve_stein(params, u)
        v = sol.evaluate(points)
        tf = v.f_x - score(params, points) * v.f
        worst = max(worst, abs(float(np.dot(weights, tf))))
    return worst
