import numpy as np
import pytest

from skstein import rng
from skstein.mcmc_sampler import (
    GlauberChain,
    batch_means,
    estimate_marginals,
    estimate_overlap_moments,
    site_update_probability,
    sweep,
)
from skstein.sk_model import (
    ModelParams,
    build_exact_gibbs,
    config_from_index,
    index_from_config,
    overlap_moment_exact2,
    sample_disorder,
)


def sweep_kernel(params, disorder):
    """Transition matrix of one sequential heat-bath sweep over all 2^N states."""
    n = params.n_sites
    size = 1 << n
    kernel = np.eye(size)
    for i in range(n):
        site = np.zeros((size, size))
        for c in range(size):
            s = config_from_index(c, n)
            p_up = site_update_probability(params, disorder, s, i)
            site[c, c | (1 << i)] += p_up
            site[c, c & ~(1 << i)] += 1 - p_up
        kernel = kernel @ site
    return kernel


@pytest.mark.parametrize("beta,h", [(0.5, 0.3), (1.5, 0.0), (2.0, -0.7)])
def test_gibbs_is_stationary(beta, h):
    params = ModelParams(3, beta, h)
    d = sample_disorder(3, 4)
    pi = build_exact_gibbs(params, d).probabilities
    kernel = sweep_kernel(params, d)
    np.testing.assert_allclose(kernel.sum(axis=1), 1, atol=1e-14)
    np.testing.assert_allclose(pi @ kernel, pi, atol=1e-14)


def test_kernel_matches_reference_replay():
    params = ModelParams(5, 0.8, 0.2)
    d = sample_disorder(5, 1)
    chain = GlauberChain.start(params, d, seed=3, chain_id=2)
    gen = rng.generator(3, rng.MCMC, 2)
    s = np.where(gen.random(5) < 0.5, -1.0, 1.0)
    assert np.array_equal(chain.state, s)
    recorded = chain.run(6, thin=2)
    uniforms = gen.random((6, 5))
    expected = []
    for t in range(6):
        for i in range(5):
            s[i] = 1.0 if uniforms[t, i] < site_update_probability(params, d, s, i) else -1.0
        if (t + 1) % 2 == 0:
            expected.append(s.copy())
    np.testing.assert_array_equal(recorded, np.array(expected))
    assert chain.sweeps_done == 6


def test_block_boundaries_do_not_change_trajectory():
    params = ModelParams(4, 0.5, 0.1)
    d = sample_disorder(4, 0)
    a = GlauberChain.start(params, d, 1)
    b = GlauberChain.start(params, d, 1)
    a.run(5000)
    for _ in range(5):
        b.run(1000)
    # both consumed the same uniforms in the same order
    assert np.array_equal(a.state, b.state)


def test_sweep_function():
    params = ModelParams(3, 0.5, 0.0)
    chain = GlauberChain.start(params, sample_disorder(3, 0), 0)
    assert sweep(chain) is chain and chain.sweeps_done == 1


def test_empirical_distribution_small_system():
    params = ModelParams(3, 1.0, 0.2)
    d = sample_disorder(3, 5)
    pi = build_exact_gibbs(params, d).probabilities
    chain = GlauberChain.start(params, d, 0)
    chain.run(100)
    states = chain.run(50000, thin=1)
    idx = np.array([index_from_config(s) for s in states.astype(int)])
    freq = np.bincount(idx, minlength=8) / idx.size
    indicators = (idx[:, None] == np.arange(8)).astype(float)
    _, se = batch_means(indicators, 50)
    assert np.all(np.abs(freq - pi) <= 5 * se + 1e-3)


def test_batch_means_iid():
    x = np.random.default_rng(0).normal(size=(20000, 1))
    mean, se = batch_means(x)
    assert se[0] == pytest.approx(1 / np.sqrt(20000), rel=0.5)


def test_marginals_match_exact_n10():
    params = ModelParams(10, 0.25, 0.3)
    d = sample_disorder(10, 0)
    exact = build_exact_gibbs(params, d).marginals
    est = estimate_marginals(GlauberChain.start(params, d, 0), burnin=1000, thin=10, draws=4000)
    assert np.all(np.abs(est.means - exact) <= 4 * est.stderr)


def test_overlap_second_moment_n10():
    params = ModelParams(10, 0.25, 0.3)
    d = sample_disorder(10, 0)
    q = 0.0886178337
    exact = overlap_moment_exact2(build_exact_gibbs(params, d), q)
    est = estimate_overlap_moments(params, d, q, burnin=1000, thin=10, draws=4000, seed=0)
    assert abs(est.m2 - exact) <= 4 * est.m2_stderr


def test_overlap_fourth_moment_beta_zero():
    n = 10
    est = estimate_overlap_moments(ModelParams(n, 0.0, 0.0), sample_disorder(n, 0), 0.0,
                                   burnin=10, thin=1, draws=20000, seed=1)
    assert abs(est.m4 - (3 * n - 2) / n**3) <= 4 * est.m4_stderr


def test_draw_minimum():
    params = ModelParams(3, 0.5)
    with pytest.raises(ValueError):
        estimate_marginals(GlauberChain.start(params, sample_disorder(3, 0), 0), draws=10)
