"""Walker/Vose alias tables for O(1) draws from a finite distribution."""

from dataclasses import dataclass

import numba
import numpy as np


@numba.njit(cache=True)
def _vose(probs):
    n = probs.size
    scaled = probs * n
    prob = np.ones(n)
    alias = np.arange(n)
    small = np.empty(n, np.int64)
    large = np.empty(n, np.int64)
    ns = 0
    nl = 0
    for i in range(n):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        nl -= 1
        g = large[nl]
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            small[ns] = g
            ns += 1
        else:
            large[nl] = g
            nl += 1
    # leftovers are 1 up to rounding
    return prob, alias


@dataclass(frozen=True)
class AliasTable:
    prob: np.ndarray
    alias: np.ndarray

    @classmethod
    def build(cls, probabilities):
        p = np.asarray(probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0 or np.any(p < 0) or not np.isfinite(p).all():
            raise ValueError("probabilities must be a non-empty, non-negative vector")
        total = p.sum()
        if total <= 0:
            raise ValueError("probabilities sum to zero")
        prob, alias = _vose(p / total)
        return cls(prob, alias)

    @property
    def size(self):
        return self.prob.size

    def sample(self, gen: np.random.Generator, count):
        """Draw ``count`` indices using generator ``gen``."""
        count = int(count)
        column = gen.integers(0, self.size, size=count)
        coin = gen.random(count)
        return np.where(coin < self.prob[column], column, self.alias[column])
