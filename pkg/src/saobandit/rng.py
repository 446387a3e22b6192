"""Random streams for episodes.

Every episode draws from independent numpy generators derived from one master
seed. The splitting rule is fixed so that results are reproducible:

    stream(seed, replicate, offset) = default_rng(SeedSequence(seed, spawn_key=(replicate, offset)))

with ``ENV_STREAM = 1`` for the reward process and ``POLICY_STREAM + j`` for the
j-th policy of a comparison. Offsets are nonzero so that no stream coincides
with ``default_rng(seed)``. All policies in a comparison see the same
environment stream, which pairs their reward realizations.
"""

from __future__ import annotations

import numpy as np

ENV_STREAM = 1
POLICY_STREAM = 2

_BLOCK = 4096


def stream(seed: int, replicate: int, offset: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replicate), int(offset)))
    return np.random.default_rng(ss)


class UniformStream:
    """Buffered U[0,1) draws as Python floats.

    Per-call numpy overhead dominates single-round simulation, so uniforms are
    generated in blocks and handed out one at a time.
    """

    __slots__ = ("_gen", "_buf", "_pos")

    def __init__(self, gen: np.random.Generator | int | None = None):
        if not isinstance(gen, np.random.Generator):
            gen = np.random.default_rng(gen)
        self._gen = gen
        self._buf: list[float] = []
        self._pos = 0

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def uniform(self) -> float:
        pos = self._pos
        if pos >= len(self._buf):
            self._buf = self._gen.random(_BLOCK).tolist()
            pos = 0
        self._pos = pos + 1
        return self._buf[pos]


class UniformRows:
    """Buffered rows of K uniforms, one row per round."""

    __slots__ = ("_gen", "_k", "_buf", "_pos")

    def __init__(self, gen: np.random.Generator, k: int):
        self._gen = gen
        self._k = k
        self._buf: list[list[float]] = []
        self._pos = 0

    def next_row(self) -> list[float]:
        pos = self._pos
        if pos >= len(self._buf):
            self._buf = self._gen.random((_BLOCK // self._k + 1, self._k)).tolist()
            pos = 0
        self._pos = pos + 1
        return self._buf[pos]


def sample_index(p, u: float) -> int:
    """Inverse-CDF draw from probability vector ``p`` with uniform ``u``."""
    acc = 0.0
    last = len(p) - 1
    for i in range(last):
        acc += p[i]
        if u < acc:
            return i
    # remaining mass goes to the last arm with nonzero probability
    for i in range(last, -1, -1):
        if p[i] > 0.0:
            return i
    raise ValueError("probability vector has no positive entry")
