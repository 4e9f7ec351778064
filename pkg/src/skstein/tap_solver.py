"""The overlap self-consistency equation and the TAP fixed-point system."""

from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousRootError, ConvergenceError
from .gaussian_tools import gauss_hermite
from .sk_model import DisorderMatrix, ExactGibbsTable, ModelParams

Q_ORDER = 64
Q_DAMPING = 0.5
Q_MAX_ITER = 10_000


@dataclass(frozen=True)
class QSolution:
    q: float
    iterations: int
    residual: float


def q_map(beta, h, q, order=Q_ORDER):
    """E tanh^2(beta z sqrt(q) + h) by Gauss-Hermite quadrature."""
    rule = gauss_hermite(order)
    return float(np.dot(rule.weights, np.tanh(beta * np.sqrt(max(q, 0.0)) * rule.nodes + h) ** 2))


def q_fixed_point(beta, h, tol=1e-13) -> QSolution:
    """Solve q = E tanh^2(beta z sqrt(q) + h) by damped iteration from tanh^2(h).

    At h = 0 and beta <= 1 the high-temperature root q = 0 is returned
    directly; for h = 0 and beta > 1 the equation has a second root and the
    call is refused.
    """
    if tol < 1e-14:
        raise ValueError("tol must be at least 1e-14")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if h == 0:
        if beta <= 1:
            return QSolution(0.0, 0, 0.0)
        raise AmbiguousRootError("h = 0 with beta > 1 has several fixed points")
    q = np.tanh(h) ** 2
    trajectory = [q]
    for it in range(1, Q_MAX_ITER + 1):
        target = q_map(beta, h, q)
        if abs(target - q) <= tol:
            return QSolution(float(q), it - 1, abs(target - q))
        q = (1 - Q_DAMPING) * q + Q_DAMPING * target
        trajectory.append(q)
    raise ConvergenceError(f"q iteration did not converge in {Q_MAX_ITER} steps", trajectory)


@dataclass(frozen=True, eq=False)
class TapSolution:
    m: np.ndarray
    iterations: int
    residual_sup: float
    converged: bool


def tap_rhs(disorder: DisorderMatrix, params: ModelParams, q, m):
    """tanh((beta/sqrt N) sum_{j != i} g_ij m_j + h - beta^2 (1 - q) m_i) for every i."""
    n = disorder.n_sites
    b = params.beta
    return np.tanh(b / np.sqrt(n) * (disorder.matrix @ m) + params.h - b * b * (1 - q) * m)


def tap_substitution_residual(disorder, params, q, m) -> float:
    m = np.asarray(m, dtype=float)
    return float(np.max(np.abs(m - tap_rhs(disorder, params, q, m))))


def tap_iterate(disorder: DisorderMatrix, params: ModelParams, q, damping=0.5, tol=1e-12,
                max_iter=1000) -> TapSolution:
    """Damped synchronous iteration of the TAP equations from m_i = tanh(h).

    Running out of iterations is reported through ``converged=False``.
    """
    if not 0 <= q < 1:
        raise ValueError("q must lie in [0, 1)")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    if params.n_sites != disorder.n_sites:
        raise ValueError("params and disorder disagree on the number of sites")
    m = np.full(disorder.n_sites, np.tanh(params.h))
    residual = np.inf
    for it in range(max_iter + 1):
        rhs = tap_rhs(disorder, params, q, m)
        residual = float(np.max(np.abs(m - rhs)))
        if residual <= tol:
            return TapSolution(m, it, residual, True)
        if it == max_iter:
            break
        m = (1 - damping) * m + damping * rhs
    return TapSolution(m, max_iter, residual, False)


def tap_vs_exact(solution: TapSolution, table: ExactGibbsTable) -> float:
    """(1/N) sum_i (m_i - <sigma_i>)^2."""
    if solution.m.shape != (table.n_sites,):
        raise ValueError("solution and table disagree on the number of sites")
    return float(np.mean((solution.m - table.marginals) ** 2))


def tap_residual_exact(table: ExactGibbsTable, disorder: DisorderMatrix, q) -> np.ndarray:
    """Per-site TAP residual with the exact marginals substituted."""
    if not 0 <= q < 1:
        raise ValueError("q must lie in [0, 1)")
    m = table.marginals
    return m - tap_rhs(disorder, table.params, q, m)
