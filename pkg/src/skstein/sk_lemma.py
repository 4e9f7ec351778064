"""The approximation lemma applied to quenched fields of the SK model.

For site 0, with the couplings among sites 1..N-1 held fixed and the row
``g_0k`` drawn afresh, take

    h_j(g) = N^{-1/2} <(sigma_j - <sigma_j>) f(l_0, r_0)>,   j = 1..N-1,

where ``f`` is the Stein solution for the test function ``u`` under
M(beta, h, r_0, 1 - q).  The partial derivatives dh_j/dg_0k are central
differences over rebuilt enumeration tables.
"""

import numpy as np

from . import rng
from .battery import make_test_function
from .errors import CapacityExceededError
from .gaussian_tools import LemmaSides, lemma_sides_from_samples
from .mixture_stein import MixtureGaussianParams, solve_stein
from .sk_model import DisorderMatrix, ExactGibbsTable, build_exact_gibbs

MAX_SITES = 14
FD_STEP = 1e-4


def _with_row(disorder: DisorderMatrix, row):
    n = disorder.n_sites
    m = np.array(disorder.matrix)
    m[0, 1:] = row
    m[1:, 0] = row
    return DisorderMatrix(n, m[np.triu_indices(n, 1)], disorder.seed)


def _fields(params, disorder, row, q, solution):
    table = build_exact_gibbs(params, _with_row(disorder, row))
    n = params.n_sites
    m = table.marginals
    r0 = table.disorder.matrix[0] @ m / np.sqrt(n) - params.beta * (1 - q) * m[0]
    lf = table.linear_form(table.disorder.matrix[0] / np.sqrt(n))
    f = solution.evaluate(lf, r0).f
    moments = table.spin_moments(f)
    return (moments[1:] - m[1:] * table.expect(f)) / np.sqrt(n)


def approximation_lemma_sk(table: ExactGibbsTable, disorder: DisorderMatrix, q, u_name="tanh",
                           replications=200, seed=0) -> LemmaSides:
    """Both sides of the approximation lemma over fresh draws of the site-0 couplings."""
    params = table.params
    n = params.n_sites
    if n > MAX_SITES:
        raise CapacityExceededError(f"approximation_lemma_sk is capped at {MAX_SITES} sites")
    if disorder.n_sites != n:
        raise ValueError("table and disorder disagree on the number of sites")
    if not 0 <= q < 1:
        raise ValueError("q must lie in [0, 1)")
    u = make_test_function(u_name, params.beta, params.h)
    solution = solve_stein(MixtureGaussianParams(params.beta, params.h, 0.0, 1 - q), u)

    lhs = np.empty(replications)
    rhs = np.empty(replications)
    for rep in range(replications):
        row = rng.generator(seed, rng.MONTE_CARLO, 2, rep).standard_normal(n - 1)
        h = _fields(params, disorder, row, q, solution)
        jac = np.empty((n - 1, n - 1))
        for k in range(n - 1):
            step = np.zeros(n - 1)
            step[k] = FD_STEP
            up = _fields(params, disorder, row + step, q, solution)
            down = _fields(params, disorder, row - step, q, solution)
            jac[:, k] = (up - down) / (2 * FD_STEP)
        lhs[rep] = (row @ h - np.trace(jac)) ** 2
        rhs[rep] = h @ h + np.sum(jac * jac.T)
    return lemma_sides_from_samples(lhs, rhs)
