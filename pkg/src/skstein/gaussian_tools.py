"""Gaussian quadrature, Gaussian integration by parts and the approximation lemma.

The approximation lemma states that for independent standard Gaussians
``g_1..g_n`` and smooth ``h_j(g)``::

    E(sum_j g_j h_j - sum_j dh_j/dg_j)^2
        = sum_j E h_j^2 + sum_{j,k} E(dh_j/dg_k * dh_k/dg_j)

``approximation_lemma_sides`` estimates both sides by Monte Carlo on the same
draws.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from . import rng
from .errors import NumericFailure

MAX_ORDER = 256


@dataclass(frozen=True)
class GaussHermiteRule:
    """Nodes and weights for expectations under the standard normal law."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def expect(self, fn, mean=0.0, std=1.0):
        return gaussian_expectation(fn, self, mean=mean, std=std)


@lru_cache(maxsize=None)
def gauss_hermite(order: int) -> GaussHermiteRule:
    """Probabilists' Gauss-Hermite rule, exact for polynomials of degree < 2*order."""
    order = int(order)
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must lie in [1, {MAX_ORDER}], got {order}")
    x, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    # symmetrise to kill the O(eps) asymmetry of the eigen-solver
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return GaussHermiteRule(order, x, w)


def gaussian_expectation(fn, rule: GaussHermiteRule, mean=0.0, std=1.0) -> float:
    """E fn(mean + std * z) for standard normal z, by the quadrature ``rule``."""
    vals = np.asarray(fn(mean + std * rule.nodes), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericFailure("integrand is not finite at a quadrature node")
    return float(np.dot(rule.weights, vals))


@lru_cache(maxsize=None)
def _legendre(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def legendre_panels(breaks, order=16):
    """Composite Gauss-Legendre nodes on the panels delimited by ``breaks``.

    ``breaks`` has shape ``(..., P + 1)`` and must be sorted along the last
    axis; zero-width panels contribute nothing.  Returns ``(nodes, weights)``
    of shape ``(..., P * order)``.
    """
    breaks = np.asarray(breaks, dtype=float)
    x, w = _legendre(order)
    lo = breaks[..., :-1, None]
    half = 0.5 * (breaks[..., 1:, None] - lo)
    nodes = lo + half * (x + 1.0)
    weights = half * w
    shape = breaks.shape[:-1] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def gaussian_expectation_piecewise(fn, mean=0.0, std=1.0, breaks=(), width=None, order=16,
                                   span=12.0):
    """E fn(X), X ~ N(mean, std^2), by composite Gauss-Legendre on mean +/- span*std.

    ``breaks`` are points where ``fn`` may jump; panels never straddle them.
    ``width`` caps the panel width (default ``std``).  The truncated tails
    carry probability below 1e-32 for the default span.
    """
    lo, hi = mean - span * std, mean + span * std
    width = std if width is None else min(width, std)
    n_panels = max(int(np.ceil((hi - lo) / width)), 1)
    pts = np.linspace(lo, hi, n_panels + 1)
    inner = [b for b in breaks if lo < b < hi]
    pts = np.unique(np.concatenate([pts, inner]))
    nodes, weights = legendre_panels(pts, order)
    dens = np.exp(-0.5 * ((nodes - mean) / std) ** 2) / (np.sqrt(2.0 * np.pi) * std)
    vals = np.asarray(fn(nodes), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericFailure("integrand is not finite at a quadrature node")
    return float(np.sum(weights * dens * vals))


class MonteCarloResidual(NamedTuple):
    residual: float
    stderr: float


def ibp_residual(f, fprime, samples, seed) -> MonteCarloResidual:
    """Monte Carlo check of Gaussian integration by parts, E g f(g) = E f'(g).

    Both sides use the same draws; the standard error is that of the paired
    difference.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    g = rng.generator(seed, rng.MONTE_CARLO, 0).standard_normal(int(samples))
    diff = g * np.asarray(f(g), dtype=float) - np.asarray(fprime(g), dtype=float)
    return MonteCarloResidual(abs(float(diff.mean())), float(diff.std(ddof=1) / np.sqrt(samples)))


@dataclass(frozen=True)
class SmoothFieldFamily:
    """Functions ``h_1..h_n`` of an n-vector of Gaussians with their Jacobian.

    ``values(g)`` maps ``(..., n)`` to ``(..., n)``; ``jacobian(g)`` maps
    ``(..., n)`` to ``(..., n, n)`` with entry ``[j, k] = dh_j/dg_k``.
    """

    dimension: int
    values: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    name: str = "family"

    def gradient_error(self, points, step=1e-5):
        """Max deviation between ``jacobian`` and central differences of ``values``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        worst = 0.0
        for k in range(self.dimension):
            e = np.zeros(self.dimension)
            e[k] = step
            fd = (self.values(points + e) - self.values(points - e)) / (2 * step)
            worst = max(worst, float(np.max(np.abs(fd - self.jacobian(points)[..., :, k]))))
        return worst


def constant_family(constants):
    c = np.asarray(constants, dtype=float)
    n = c.size
    return SmoothFieldFamily(
        n,
        lambda g: np.broadcast_to(c, np.shape(g)).copy(),
        lambda g: np.zeros(np.shape(g) + (n,)),
        name="constant",
    )


def identity_family(n):
    return SmoothFieldFamily(
        n,
        lambda g: np.array(g, dtype=float),
        lambda g: np.broadcast_to(np.eye(n), np.shape(g) + (n,)).copy(),
        name="identity",
    )


def shift_family(n):
    """h_j = g_{j+1}, indices cyclic."""
    perm = np.roll(np.arange(n), -1)
    jac = np.eye(n)[perm]
    return SmoothFieldFamily(
        n,
        lambda g: np.asarray(g, dtype=float)[..., perm],
        lambda g: np.broadcast_to(jac, np.shape(g) + (n,)).copy(),
        name="shift",
    )


def tanh_linear_family(matrix, offset=None):
    """h = tanh(A g + c), a nonlinear family with dense Jacobian."""
    A = np.asarray(matrix, dtype=float)
    c = np.zeros(A.shape[0]) if offset is None else np.asarray(offset, dtype=float)

    def values(g):
        return np.tanh(np.asarray(g) @ A.T + c)

    def jacobian(g):
        t = np.tanh(np.asarray(g) @ A.T + c)
        return (1.0 - t**2)[..., :, None] * A

    return SmoothFieldFamily(A.shape[0], values, jacobian, name="tanh_linear")


class LemmaSides(NamedTuple):
    lhs: float
    rhs: float
    lhs_stderr: float
    rhs_stderr: float
    diff_stderr: float

    @property
    def combined_stderr(self):
        return self.diff_stderr

    def agrees(self, k=4.0):
        return abs(self.lhs - self.rhs) <= k * self.diff_stderr


def lemma_sides_from_samples(lhs_samples, rhs_samples) -> LemmaSides:
    lhs_samples = np.asarray(lhs_samples, dtype=float)
    rhs_samples = np.asarray(rhs_samples, dtype=float)
    if not (np.all(np.isfinite(lhs_samples)) and np.all(np.isfinite(rhs_samples))):
        raise NumericFailure("non-finite value in approximation lemma samples")
    n = lhs_samples.size
    root = np.sqrt(n)
    return LemmaSides(
        float(lhs_samples.mean()),
        float(rhs_samples.mean()),
        float(lhs_samples.std(ddof=1) / root),
        float(rhs_samples.std(ddof=1) / root),
        float((lhs_samples - rhs_samples).std(ddof=1) / root),
    )


def approximation_lemma_sides(family: SmoothFieldFamily, samples, seed) -> LemmaSides:
    """Estimate both sides of the approximation lemma with common random numbers."""
    if samples < 1000:
        raise ValueError("approximation_lemma_sides needs at least 1000 samples")
    g = rng.generator(seed, rng.MONTE_CARLO, 1).standard_normal((int(samples), family.dimension))
    h = np.asarray(family.values(g), dtype=float)
    jac = np.asarray(family.jacobian(g), dtype=float)
    stat = np.sum(g * h, axis=1) - np.trace(jac, axis1=1, axis2=2)
    lhs = stat**2
    rhs = np.sum(h**2, axis=1) + np.einsum("sjk,skj->s", jac, jac)
    return lemma_sides_from_samples(lhs, rhs)
