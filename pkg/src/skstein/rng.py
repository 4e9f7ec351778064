"""Counter-based random streams.

Every random quantity in the package is drawn from a Philox generator keyed by
``(seed, stream word)``.  The stream word is derived from a stream kind and any
number of integer indices, so disorder, auxiliary Gaussians, replica draws and
Markov chains never share a stream, and each replication owns its own stream.
"""

import numpy as np

DISORDER = 1
AUXILIARY = 2
REPLICA = 3
MCMC = 4
MIXTURE = 5
MONTE_CARLO = 6
REPLICATION = 7

_MASK64 = (1 << 64) - 1


def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def stream_word(kind, *indices):
    """Map a stream kind and indices to a 64-bit word (deterministic)."""
    entropy = [int(kind)] + [int(i) for i in indices]
    if any(e < 0 for e in entropy):
        raise ValueError("stream indices must be non-negative")
    ss = np.random.SeedSequence(entropy)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generator(seed, kind, *indices):
    """Return a fresh Philox-backed Generator for ``(seed, kind, *indices)``."""
    key = np.array([_check_seed(seed), stream_word(kind, *indices)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed, *indices):
    """Derive a child 64-bit seed from a parent seed and integer indices."""
    seed = _check_seed(seed)
    ss = np.random.SeedSequence([seed & 0xFFFFFFFF, seed >> 32] + [int(i) for i in indices])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
