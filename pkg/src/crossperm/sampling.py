"""Seedable randomness for resampling.

Every draw goes through numpy's PCG64 bit generator (O'Neill 2014,
PCG-XSL-RR 128/64), seeded with a ``SeedSequence`` built from
``(seed, *stream)``. The same pair yields the same sequence on every
platform numpy supports. Sub-streams come from :func:`fork`, which derives
children from the parent's identity rather than its consumed state, so
parallel work gives the same answer regardless of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_SEED = 42
_U64 = (1 << 64) - 1


@dataclass
class RngState:
    seed: int = DEFAULT_SEED
    stream: tuple = ()
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= int(self.seed) <= _U64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(self.seed)
        self.stream = tuple(int(s) for s in self.stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen


def as_rng(rng) -> RngState:
    if isinstance(rng, RngState):
        return rng
    return RngState(DEFAULT_SEED if rng is None else rng)


def fork(rng: RngState, k: int) -> list:
    """k independent child streams keyed by (seed, stream + (i,))."""
    return [RngState(rng.seed, rng.stream + (i,)) for i in range(k)]


def shuffle(x, rng: RngState) -> np.ndarray:
    """Uniform random permutation of ``x`` (Fisher-Yates)."""
    return rng.generator.permutation(np.asarray(x))


def bootstrap_indices(n: int, rng: RngState) -> np.ndarray:
    """n i.i.d. uniform draws from {0, ..., n-1}."""
    return rng.generator.integers(0, n, size=n)


def bootstrap_index_matrix(n: int, k: int, rng: RngState) -> np.ndarray:
    """k rows of bootstrap indices drawn in one call."""
    return rng.generator.integers(0, n, size=(k, n))


def multinomial_counts(N: int, rng: RngState) -> np.ndarray:
    """Multinomial(N, uniform) counts, tallied from N uniform index draws."""
    return np.bincount(rng.generator.integers(0, N, size=N), minlength=N)


def count_matrix(N: int, B: int, rng: RngState) -> np.ndarray:
    """N x B matrix whose columns are independent multinomial counts."""
    idx = rng.generator.integers(0, N, size=(B, N))
    flat = idx + N * np.arange(B)[:, None]
    return np.bincount(flat.ravel(), minlength=N * B).reshape(B, N).T


def weight_matrix(N: int, B: int, rng: RngState) -> np.ndarray:
    """Bootstrap weights: multinomial counts divided by N, one column each."""
    return count_matrix(N, B, rng) / N


def counts_to_indices(counts) -> np.ndarray:
    """Materialize the resample implied by a count vector."""
    counts = np.asarray(counts)
    return np.repeat(np.arange(counts.size), counts)
