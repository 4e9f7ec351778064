"""The Sherrington-Kirkpatrick model at desk scale, computed exactly by enumeration.

Configurations are indexed by integers ``c`` in ``[0, 2^N)`` whose bit ``i``
is ``(sigma_i + 1) / 2``.  Sites are 0-based.  Whole-table quantities are
computed blockwise: the low ``N // 2`` bits and the high bits are enumerated
separately and combined through outer sums, so nothing of size ``2^N x N``
is ever materialised.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import rng
from .alias import AliasTable
from .errors import CapacityExceededError
from .mixture_stein import MixtureGaussianParams

MAX_ENUMERATION_SITES = 24
_CHUNK = 1 << 16


@dataclass(frozen=True)
class ModelParams:
    n_sites: int
    beta: float
    h: float = 0.0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError(f"n_sites must be an integer >= 2, got {self.n_sites}")
        if not (np.isfinite(self.beta) and self.beta >= 0):
            raise ValueError(f"beta must be finite and non-negative, got {self.beta}")
        if not np.isfinite(self.h):
            raise ValueError("h must be finite")


def _pair_count(n):
    return n * (n - 1) // 2


@dataclass(frozen=True, eq=False)
class DisorderMatrix:
    """Couplings g_ij, i < j, stored row-major over the upper triangle."""

    n_sites: int
    couplings: np.ndarray = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("n_sites must be >= 2")
        c = np.asarray(self.couplings, dtype=float)
        if c.shape != (_pair_count(self.n_sites),):
            raise ValueError(f"expected {_pair_count(self.n_sites)} couplings, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "couplings", c)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Symmetric N x N coupling matrix with zero diagonal."""
        n = self.n_sites
        m = np.zeros((n, n))
        iu = np.triu_indices(n, 1)
        m[iu] = self.couplings
        m = m + m.T
        m.setflags(write=False)
        return m

    def __getitem__(self, ij):
        i, j = ij
        if i == j:
            raise IndexError("no diagonal couplings")
        if not (0 <= i < self.n_sites and 0 <= j < self.n_sites):
            raise IndexError("site index out of range")
        return float(self.matrix[i, j])

    def to_record(self):
        return {"n_sites": self.n_sites, "seed": int(self.seed),
                "couplings": [float(v) for v in self.couplings]}

    @classmethod
    def from_record(cls, record):
        return cls(int(record["n_sites"]), np.asarray(record["couplings"], dtype=float),
                   int(record["seed"]))


def sample_disorder(n_sites, seed) -> DisorderMatrix:
    """Draw iid standard normal couplings from the disorder stream of ``seed``.

    The stream is consumed in column order (pair (i, j) at position
    ``j (j - 1) / 2 + i``), so the couplings among the first N sites are the
    same for every system size sharing the seed.
    """
    n = int(n_sites)
    if n < 2:
        raise ValueError("n_sites must be >= 2")
    draws = rng.generator(seed, rng.DISORDER).standard_normal(_pair_count(n))
    i, j = np.triu_indices(n, 1)
    return DisorderMatrix(n, draws[j * (j - 1) // 2 + i], int(seed))


@dataclass(frozen=True, eq=False)
class AuxiliaryGaussians:
    values: np.ndarray
    seed: int = 0


def sample_auxiliary(n_sites, seed) -> AuxiliaryGaussians:
    """Fresh Gaussians g_1..g_N, independent of the disorder drawn from the same seed."""
    vals = rng.generator(seed, rng.AUXILIARY).standard_normal(int(n_sites))
    vals.setflags(write=False)
    return AuxiliaryGaussians(vals, int(seed))


def check_config(config, n_sites=None) -> np.ndarray:
    s = np.asarray(config)
    if s.ndim != 1 or not np.all((s == 1) | (s == -1)):
        raise ValueError("a spin configuration is a vector of +1/-1 entries")
    if n_sites is not None and s.size != n_sites:
        raise ValueError(f"configuration has {s.size} spins, expected {n_sites}")
    return s.astype(float)


def config_from_index(index, n_sites) -> np.ndarray:
    """Spins of configuration ``index`` (array of indices allowed)."""
    index = np.asarray(index, dtype=np.int64)
    bits = (index[..., None] >> np.arange(n_sites)) & 1
    return 2.0 * bits - 1.0


def index_from_config(config) -> int:
    s = check_config(config)
    return int(np.sum(((s + 1) // 2).astype(np.int64) << np.arange(s.size)))


def _block_spins(n):
    return config_from_index(np.arange(1 << n), n)


def energy_exponent(params: ModelParams, disorder: DisorderMatrix, config) -> float:
    """(beta / sqrt N) sum_{i<j} g_ij s_i s_j + h sum_i s_i."""
    _check_dims(params, disorder)
    s = check_config(config, params.n_sites)
    inter = 0.5 * s @ disorder.matrix @ s
    return float(params.beta / np.sqrt(params.n_sites) * inter + params.h * s.sum())


def _check_dims(params, disorder):
    if params.n_sites != disorder.n_sites:
        raise ValueError("params and disorder disagree on the number of sites")


@dataclass(frozen=True, eq=False)
class ExactGibbsTable:
    """All 2^N log-weights, the log-partition function and the Gibbs probabilities."""

    params: ModelParams
    disorder: DisorderMatrix = field(repr=False)
    log_weights: np.ndarray = field(repr=False)
    log_partition: float
    probabilities: np.ndarray = field(repr=False)

    @property
    def n_sites(self):
        return self.params.n_sites

    @cached_property
    def _split(self):
        n = self.n_sites
        k = n // 2
        return k, _block_spins(k), _block_spins(n - k)

    def linear_form(self, w) -> np.ndarray:
        """sum_i w_i s_i for every configuration, as a vector of length 2^N."""
        w = np.asarray(w, dtype=float)
        k, lo, hi = self._split
        return ((hi @ w[k:])[:, None] + (lo @ w[:k])[None, :]).ravel()

    def quadratic_form(self, sym) -> np.ndarray:
        """sum_{i<j} A_ij s_i s_j for every configuration, A symmetric with zero diagonal."""
        return _quadratic_form(np.asarray(sym, dtype=float), *self._split)

    def expect(self, values) -> float:
        """Gibbs average of a per-configuration vector."""
        return float(np.dot(self.probabilities, values))

    @cached_property
    def _prob_blocks(self):
        k = self._split[0]
        return self.probabilities.reshape(-1, 1 << k)

    @cached_property
    def marginals(self) -> np.ndarray:
        """<sigma_i> for every site."""
        k, lo, hi = self._split
        p2 = self._prob_blocks
        m = np.concatenate([p2.sum(axis=0) @ lo, p2.sum(axis=1) @ hi])
        m.setflags(write=False)
        return m

    def spin_moments(self, values) -> np.ndarray:
        """<sigma_i v> for every site, ``values`` a per-configuration vector."""
        k, lo, hi = self._split
        pv = (self.probabilities * values).reshape(-1, 1 << k)
        return np.concatenate([pv.sum(axis=0) @ lo, pv.sum(axis=1) @ hi])

    @cached_property
    def correlations(self) -> np.ndarray:
        """<sigma_i sigma_j> for every pair (unit diagonal)."""
        k, lo, hi = self._split
        p2 = self._prob_blocks
        plo, phi = p2.sum(axis=0), p2.sum(axis=1)
        c_ll = lo.T @ (plo[:, None] * lo)
        c_hh = hi.T @ (phi[:, None] * hi)
        c_lh = lo.T @ (p2.T @ hi)
        c = np.block([[c_ll, c_lh], [c_lh.T, c_hh]])
        np.fill_diagonal(c, 1.0)
        c.setflags(write=False)
        return c

    @cached_property
    def alias_table(self) -> AliasTable:
        return AliasTable.build(self.probabilities)

    def sample_configs(self, gen, count) -> np.ndarray:
        """Draw configuration indices from the Gibbs measure."""
        return self.alias_table.sample(gen, count)


def _quadratic_form(sym, k, lo, hi):
    a_ll, a_hh, a_lh = sym[:k, :k], sym[k:, k:], sym[:k, k:]
    q_lo = 0.5 * np.sum((lo @ a_ll) * lo, axis=1)
    q_hi = 0.5 * np.sum((hi @ a_hh) * hi, axis=1)
    cross = (hi @ a_lh.T) @ lo.T
    cross += q_hi[:, None]
    cross += q_lo[None, :]
    return cross.ravel()


def _logsumexp(values):
    top = np.max(values)
    return float(top + np.log(np.sum(np.exp(values - top))))


def build_exact_gibbs(params: ModelParams, disorder: DisorderMatrix) -> ExactGibbsTable:
    """Enumerate all 2^N configurations of the Gibbs measure."""
    _check_dims(params, disorder)
    n = params.n_sites
    if n > MAX_ENUMERATION_SITES:
        raise CapacityExceededError(f"enumeration is capped at {MAX_ENUMERATION_SITES} sites, got {n}")
    k = n // 2
    lo, hi = _block_spins(k), _block_spins(n - k)
    scale = params.beta / np.sqrt(n)
    logw = _quadratic_form(disorder.matrix * scale, k, lo, hi)
    if params.h != 0.0:
        field_lo = params.h * lo.sum(axis=1)
        field_hi = params.h * hi.sum(axis=1)
        logw = (logw.reshape(-1, 1 << k) + field_hi[:, None] + field_lo[None, :]).ravel()
    log_z = _logsumexp(logw)
    probs = np.exp(logw - log_z)
    for arr in (logw, probs):
        arr.setflags(write=False)
    return ExactGibbsTable(params, disorder, logw, log_z, probs)


def quenched_average(table: ExactGibbsTable, observable, replicas=1) -> float:
    """Exact Gibbs average of ``observable`` over 1 or 2 replicas.

    ``observable`` is vectorised: for one replica it maps spins of shape
    ``(B, N)`` to ``(B,)``; for two it maps ``(B, 1, N)`` and ``(1, M, N)`` to
    ``(B, M)``.  More replicas need the sampled estimators.
    """
    n = table.n_sites
    size = 1 << n
    p = table.probabilities
    if replicas == 1:
        total = 0.0
        for start in range(0, size, _CHUNK):
            idx = np.arange(start, min(start + _CHUNK, size))
            total += float(np.dot(p[idx], observable(config_from_index(idx, n))))
        return total
    if replicas == 2:
        if n > 14:
            raise CapacityExceededError("exact two-replica sums are capped at 14 sites")
        spins = config_from_index(np.arange(size), n)
        step = max(1, (1 << 20) // size)
        total = 0.0
        for start in range(0, size, step):
            block = slice(start, min(start + step, size))
            vals = np.asarray(observable(spins[block, None, :], spins[None, :, :]), dtype=float)
            total += float(p[block] @ vals @ p)
        return total
    raise NotImplementedError("more than two replicas: use overlap_moment_sampled4 or mcmc_sampler")


def _site(table_or_n, i):
    n = table_or_n if isinstance(table_or_n, int) else table_or_n.n_sites
    if not 0 <= i < n:
        raise ValueError(f"site index {i} out of range for {n} sites")
    return i


def spin_marginal(table: ExactGibbsTable, i) -> float:
    return float(table.marginals[_site(table, i)])


def pair_correlation(table: ExactGibbsTable, i, j) -> float:
    _site(table, i)
    _site(table, j)
    return float(table.correlations[i, j])


def local_field(disorder: DisorderMatrix, config, i) -> float:
    """(1 / sqrt N) sum_{j != i} g_ij s_j."""
    s = check_config(config, disorder.n_sites)
    _site(disorder.n_sites, i)
    return float(disorder.matrix[i] @ s / np.sqrt(disorder.n_sites))


def local_field_values(table: ExactGibbsTable, i) -> np.ndarray:
    """Local field at site ``i`` for every configuration."""
    _site(table, i)
    return table.linear_form(table.disorder.matrix[i] / np.sqrt(table.n_sites))


def _check_q(q):
    if not 0 <= q < 1:
        raise ValueError(f"q must lie in [0, 1), got {q}")


def r_value(table: ExactGibbsTable, disorder: DisorderMatrix, q, i) -> float:
    """(1 / sqrt N) sum_{j != i} g_ij <sigma_j> - beta (1 - q) <sigma_i>."""
    _check_q(q)
    _site(table, i)
    m = table.marginals
    n = table.n_sites
    return float(disorder.matrix[i] @ m / np.sqrt(n) - table.params.beta * (1 - q) * m[i])


def nu_params(params: ModelParams, r_i, q) -> MixtureGaussianParams:
    """The approximating mixture for the local field: M(beta, h, r_i, 1 - q)."""
    if not q < 1:
        raise ValueError("q must be below 1")
    return MixtureGaussianParams(float(params.beta), float(params.h), float(r_i), float(1 - q))


def overlap_moment_exact2(table: ExactGibbsTable, q) -> float:
    """<(R12 - q)^2> from the pair correlations."""
    n = table.n_sites
    m = table.marginals
    c = table.correlations
    return float(np.sum(c**2) / n**2 - 2 * q * np.sum(m**2) / n + q**2)


def overlaps(indices1, indices2, n_sites) -> np.ndarray:
    """R12 between configurations given by index."""
    diff = np.bitwise_count(np.bitwise_xor(indices1, indices2).astype(np.uint64))
    return (n_sites - 2.0 * diff) / n_sites


def overlap_moment_sampled4(table: ExactGibbsTable, q, samples, seed):
    """Monte Carlo estimate and standard error of <(R12 - q)^4> from replica pairs."""
    samples = int(samples)
    if samples < 100:
        raise ValueError("need at least 100 replica pairs")
    gen = rng.generator(seed, rng.REPLICA)
    c1 = table.sample_configs(gen, samples)
    c2 = table.sample_configs(gen, samples)
    vals = (overlaps(c1, c2, table.n_sites) - q) ** 4
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(samples))


def hamiltonian_h(params: ModelParams, disorder: DisorderMatrix, config) -> float:
    """(1/N) sum_{i<j} g_ij s_i s_j - sqrt(N) beta / 2."""
    _check_dims(params, disorder)
    s = check_config(config, params.n_sites)
    n = params.n_sites
    return float(0.5 * s @ disorder.matrix @ s / n - np.sqrt(n) * params.beta / 2)


def hamiltonian_values(table: ExactGibbsTable) -> np.ndarray:
    n = table.n_sites
    return table.quadratic_form(table.disorder.matrix) / n - np.sqrt(n) * table.params.beta / 2


def cavity_field(aux: AuxiliaryGaussians, config) -> float:
    """(1 / sqrt N) sum_i g_i s_i."""
    s = check_config(config, len(aux.values))
    return float(aux.values @ s / np.sqrt(s.size))


def cavity_field_values(table: ExactGibbsTable, aux: AuxiliaryGaussians) -> np.ndarray:
    if len(aux.values) != table.n_sites:
        raise ValueError("auxiliary Gaussians and table disagree on the number of sites")
    return table.linear_form(aux.values / np.sqrt(table.n_sites))


def callen_identity_residual(table: ExactGibbsTable, disorder: DisorderMatrix, i) -> float:
    """|<sigma_i> - <tanh(beta l_i + h)>|, an exact identity of the Gibbs measure."""
    _site(table, i)
    p = table.params
    lf = table.linear_form(disorder.matrix[i] / np.sqrt(table.n_sites))
    return abs(table.marginals[i] - table.expect(np.tanh(p.beta * lf + p.h)))
