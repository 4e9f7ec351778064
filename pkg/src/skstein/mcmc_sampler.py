"""Heat-bath (Glauber) dynamics for the SK Gibbs measure.

A sweep visits sites 0..N-1 in order and resamples each from its exact
conditional law: +1 with probability (1 + tanh(beta l_i + h)) / 2.  Uniforms
come from the chain's counter-based stream, drawn one sweep-block at a time,
so a chain is a deterministic function of its seed.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numba
import numpy as np

from . import rng
from .sk_model import DisorderMatrix, ModelParams, check_config

DEFAULT_BURNIN = 1000
DEFAULT_THIN = 10
_BLOCK_SWEEPS = 4096


@numba.njit(cache=True)
def _run(coupling, h, state, uniforms, thin, out):
    # coupling already carries beta / sqrt(N); out has one row per recorded draw
    n = state.size
    n_sweeps = uniforms.shape[0]
    rec = 0
    for sweep in range(n_sweeps):
        for i in range(n):
            field_i = h
            for j in range(n):
                field_i += coupling[i, j] * state[j]
            p_up = 0.5 * (1.0 + np.tanh(field_i))
            state[i] = 1.0 if uniforms[sweep, i] < p_up else -1.0
        if thin > 0 and (sweep + 1) % thin == 0:
            out[rec, :] = state
            rec += 1
    return rec


def site_update_probability(params: ModelParams, disorder: DisorderMatrix, config, i) -> float:
    """Probability that the heat-bath update sets site ``i`` to +1."""
    s = check_config(config, params.n_sites)
    lf = disorder.matrix[i] @ s / np.sqrt(params.n_sites)
    return float(0.5 * (1.0 + np.tanh(params.beta * lf + params.h)))


@dataclass(eq=False)
class GlauberChain:
    params: ModelParams
    disorder: DisorderMatrix = field(repr=False)
    state: np.ndarray
    seed: int = 0
    chain_id: int = 0
    sweeps_done: int = 0
    _gen: np.random.Generator = field(default=None, repr=False)

    def __post_init__(self):
        if self.params.n_sites != self.disorder.n_sites:
            raise ValueError("params and disorder disagree on the number of sites")
        self.state = check_config(self.state, self.params.n_sites).copy()
        if self._gen is None:
            self._gen = rng.generator(self.seed, rng.MCMC, self.chain_id)
        self._coupling = np.ascontiguousarray(
            self.disorder.matrix * (self.params.beta / np.sqrt(self.params.n_sites)))

    @classmethod
    def start(cls, params, disorder, seed, chain_id=0):
        """Chain started from a uniformly random configuration drawn from its own stream."""
        gen = rng.generator(seed, rng.MCMC, chain_id)
        state = np.where(gen.random(params.n_sites) < 0.5, -1.0, 1.0)
        return cls(params, disorder, state, seed, chain_id, 0, gen)

    def run(self, sweeps, thin=0) -> np.ndarray:
        """Advance ``sweeps`` sweeps, returning the state after every ``thin``-th one."""
        sweeps = int(sweeps)
        n = self.params.n_sites
        records = np.empty((sweeps // thin if thin else 0, n))
        done = 0
        stored = 0
        while done < sweeps:
            block = min(_BLOCK_SWEEPS - _BLOCK_SWEEPS % thin if thin else _BLOCK_SWEEPS,
                        sweeps - done)
            uniforms = self._gen.random((block, n))
            buf = np.empty((block // thin if thin else 0, n))
            got = _run(self._coupling, float(self.params.h), self.state, uniforms, thin, buf)
            records[stored:stored + got] = buf[:got]
            stored += got
            done += block
        self.sweeps_done += sweeps
        return records

    def sweep(self):
        self.run(1)
        return self


def sweep(chain: GlauberChain) -> GlauberChain:
    """One full sequential heat-bath sweep (mutates and returns ``chain``)."""
    return chain.sweep()


class Estimate(NamedTuple):
    means: np.ndarray
    stderr: np.ndarray


def batch_means(samples, n_batches=20):
    """Column means and batch-means standard errors of a (draws, k) array."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    draws = samples.shape[0]
    n_batches = min(n_batches, draws)
    size = draws // n_batches
    trimmed = samples[: size * n_batches].reshape(n_batches, size, -1).mean(axis=1)
    return samples.mean(axis=0), trimmed.std(axis=0, ddof=1) / np.sqrt(n_batches)


def estimate_marginals(chain: GlauberChain, burnin=DEFAULT_BURNIN, thin=DEFAULT_THIN,
                       draws=1000) -> Estimate:
    """Time-averaged spin marginals with batch-means errors."""
    if draws < 100:
        raise ValueError("need at least 100 draws")
    chain.run(burnin)
    samples = chain.run(draws * thin, thin)
    means, err = batch_means(samples)
    return Estimate(means, err)


class OverlapMoments(NamedTuple):
    m2: float
    m4: float
    m2_stderr: float
    m4_stderr: float


def estimate_overlap_moments(params, disorder, q=0.0, burnin=DEFAULT_BURNIN, thin=DEFAULT_THIN,
                             draws=1000, seed=0) -> OverlapMoments:
    """<(R12 - q)^2> and <(R12 - q)^4> from two independent chains."""
    if draws < 100:
        raise ValueError("need at least 100 draws")
    a = GlauberChain.start(params, disorder, seed, 0)
    b = GlauberChain.start(params, disorder, seed, 1)
    a.run(burnin)
    b.run(burnin)
    sa = a.run(draws * thin, thin)
    sb = b.run(draws * thin, thin)
    dev = np.mean(sa * sb, axis=1) - q
    means, err = batch_means(np.column_stack([dev**2, dev**4]))
    return OverlapMoments(float(means[0]), float(means[1]), float(err[0]), float(err[1]))
