"""Reward processes: stochastic arms, oblivious and adaptive adversaries.

An environment is an immutable description. ``env.start(rng)`` returns an
episode-local sampler whose ``draw(t, history)`` produces the full reward
vector for round ``t`` *before* the policy's choice for that round exists, so
an adaptive adversary can only see plays and reward vectors of rounds
``1..t-1``. The harness reveals ``g[I_t]`` alone to the policy.

Stochastic environments and the probe adversaries consume exactly one row of
K uniforms per round and turn it into rewards the same way, so a probe whose
perturbation is switched off reproduces its base environment draw for draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, InvalidRewardError
from .rng import UniformRows

PROBE_KINDS = ("stochastic-then-flip", "gap-inflater", "gap-collapser", "estimator-skewer")


@dataclass
class History:
    """What an adaptive adversary may look at: past plays and past reward vectors."""

    plays: list[int] = field(default_factory=list)
    rewards: list[list[float]] = field(default_factory=list)

    def append(self, arm: int, rewards: list[float]) -> None:
        self.plays.append(arm)
        self.rewards.append(rewards)

    def __len__(self) -> int:
        return len(self.plays)


class EnvRandom:
    """Randomness handed to an environment for one episode."""

    __slots__ = ("generator", "_rows")

    def __init__(self, generator: np.random.Generator, k: int):
        self.generator = generator
        self._rows = UniformRows(generator, k)

    def row(self) -> list[float]:
        return self._rows.next_row()


def _check_rewards(g: Sequence[float], k: int, t: int) -> list[float]:
    g = [float(x) for x in g]
    if len(g) != k:
        raise InvalidRewardError(f"round {t}: adversary returned {len(g)} rewards for K={k}")
    for i, x in enumerate(g):
        if not 0.0 <= x <= 1.0:
            raise InvalidRewardError(f"round {t}: reward {x!r} for arm {i} outside [0, 1]")
    return g


class Environment:
    k: int
    needs_history = False

    @property
    def mu(self) -> tuple[float, ...] | None:
        """Per-arm means when the environment is stochastic, else None."""
        return None

    def start(self, rng: np.random.Generator) -> "Sampler":
        raise NotImplementedError


class Sampler:
    def draw(self, t: int, history: History | None) -> list[float]:
        raise NotImplementedError


def draw_round(env: Environment, t: int, history: History | None, rng: np.random.Generator) -> list[float]:
    """One-off draw of the round-``t`` reward vector.

    Convenience form; episodes should keep a single sampler from
    ``env.start(rng)`` instead of calling this every round.
    """
    if t < 1:
        raise ValueError("rounds are numbered from 1")
    if history is not None and len(history) != t - 1:
        raise ValueError(f"history must cover rounds 1..{t - 1}, got {len(history)} rounds")
    return env.start(rng).draw(t, history)


# -- stochastic ---------------------------------------------------------------


class StochasticEnvironment(Environment):
    """Independent arms with finite-support reward distributions on [0, 1]."""

    def __init__(self, values: Sequence[Sequence[float]], probs: Sequence[Sequence[float]]):
        if len(values) != len(probs) or len(values) < 2:
            raise ConfigError("need matching values/probs for at least two arms")
        self.k = len(values)
        self._supports = []
        means = []
        for i, (vs, ps) in enumerate(zip(values, probs)):
            vs = [float(v) for v in vs]
            ps = [float(p) for p in ps]
            if len(vs) != len(ps) or not vs:
                raise ConfigError(f"arm {i}: support and weights differ in length")
            if any(not 0.0 <= v <= 1.0 for v in vs):
                raise ConfigError(f"arm {i}: support must lie in [0, 1]")
            if any(p < 0.0 for p in ps) or abs(math.fsum(ps) - 1.0) > 1e-9:
                raise ConfigError(f"arm {i}: weights must be nonnegative and sum to 1")
            # descending support: a Bernoulli(m) arm pays 1 exactly when u < m
            order = sorted(range(len(vs)), key=lambda j: -vs[j])
            vs = [vs[j] for j in order]
            ps = [ps[j] for j in order]
            cum = list(np.cumsum(ps))
            cum[-1] = 1.0
            self._supports.append((tuple(vs), tuple(float(c) for c in cum)))
            means.append(math.fsum(v * p for v, p in zip(vs, ps)))
        self._mu = tuple(means)
        self._bernoulli = all(s[0] in ((1.0, 0.0), (1.0,), (0.0,)) for s in self._supports)
        if self._bernoulli:
            self._p_one = tuple(s[1][0] if s[0][0] == 1.0 else 0.0 for s in self._supports)

    @classmethod
    def bernoulli(cls, means: Sequence[float]) -> "StochasticEnvironment":
        for m in means:
            if not 0.0 <= m <= 1.0:
                raise ConfigError(f"Bernoulli mean {m!r} outside [0, 1]")
        return cls([[1.0, 0.0]] * len(means), [[float(m), 1.0 - float(m)] for m in means])

    @property
    def mu(self) -> tuple[float, ...]:
        return self._mu

    @property
    def gap(self) -> float:
        """Smallest positive gap to the best mean; 0 when all means coincide."""
        best = max(self._mu)
        gaps = [best - m for m in self._mu if m < best]
        return min(gaps) if gaps else 0.0

    def sample_row(self, u: Sequence[float]) -> list[float]:
        if self._bernoulli:
            return [1.0 if x < p else 0.0 for x, p in zip(u, self._p_one)]
        out = []
        for x, (vs, cum) in zip(u, self._supports):
            j = 0
            while x >= cum[j]:
                j += 1
            out.append(vs[j])
        return out

    def start(self, rng: np.random.Generator) -> Sampler:
        return _RowSampler(self.sample_row, EnvRandom(rng, self.k))


class _RowSampler(Sampler):
    __slots__ = ("_fn", "_rnd")

    def __init__(self, fn, rnd: EnvRandom):
        self._fn = fn
        self._rnd = rnd

    def draw(self, t, history):
        return self._fn(self._rnd.row())


# -- oblivious ----------------------------------------------------------------


class ObliviousAdversary(Environment):
    """Rewards fixed in advance as a function of (seed, t, i).

    Subclasses implement :meth:`block`, returning rounds
    ``b*block_size+1 .. (b+1)*block_size``. Samplers cache one block at a time,
    so arbitrarily long horizons run in constant memory.
    """

    block_size = 1024

    def __init__(self, k: int, seed: int | None = None):
        if k < 2:
            raise ConfigError("need at least two arms")
        self.k = k
        self.seed = seed

    def block(self, seed: int, b: int) -> list[list[float]]:
        raise NotImplementedError

    def reward(self, seed: int, t: int, i: int) -> float:
        b, r = divmod(t - 1, self.block_size)
        return self.block(seed, b)[r][i]

    def matrix(self, seed: int, n: int) -> np.ndarray:
        rows = []
        for b in range((n + self.block_size - 1) // self.block_size):
            rows.extend(self.block(seed, b))
        return np.asarray(rows[:n], dtype=float)

    def start(self, rng: np.random.Generator) -> Sampler:
        seed = self.seed if self.seed is not None else int(rng.integers(0, 2**63 - 1))
        return _BlockSampler(self, seed)


class _BlockSampler(Sampler):
    def __init__(self, adv: ObliviousAdversary, seed: int):
        self.adv = adv
        self.seed = seed
        self._b = -1
        self._rows: list[list[float]] = []

    def draw(self, t, history):
        b, r = divmod(t - 1, self.adv.block_size)
        if b != self._b:
            self._rows = self.adv.block(self.seed, b)
            self._b = b
        return list(self._rows[r])


class ConstantAdversary(ObliviousAdversary):
    def __init__(self, rewards: Sequence[float]):
        super().__init__(len(rewards), seed=0)
        self.rewards = _check_rewards(rewards, self.k, 0)

    def block(self, seed, b):
        return [self.rewards] * self.block_size


class MatrixAdversary(ObliviousAdversary):
    """A stored n x K reward matrix, for exact replay tests."""

    def __init__(self, rewards):
        m = np.asarray(rewards, dtype=float)
        if m.ndim != 2 or m.shape[1] < 2:
            raise ConfigError("reward matrix must be n x K with K >= 2")
        if np.any(m < 0.0) or np.any(m > 1.0):
            raise ConfigError("reward matrix entries must lie in [0, 1]")
        super().__init__(m.shape[1], seed=0)
        self._m = m

    @property
    def horizon(self) -> int:
        return self._m.shape[0]

    def block(self, seed, b):
        lo = b * self.block_size
        if lo >= self._m.shape[0]:
            raise IndexError(f"reward matrix has only {self._m.shape[0]} rounds")
        return self._m[lo:lo + self.block_size].tolist()


class BernoulliSequenceAdversary(ObliviousAdversary):
    """Oblivious 0/1 rewards, arm i paying 1 with frequency means[i].

    Block ``b`` is generated from its own counter-keyed generator, so any entry
    can be recomputed from (seed, t, i) alone.
    """

    def __init__(self, means: Sequence[float], seed: int | None = None):
        super().__init__(len(means), seed)
        self.means = tuple(float(m) for m in means)
        for m in self.means:
            if not 0.0 <= m <= 1.0:
                raise ConfigError(f"Bernoulli mean {m!r} outside [0, 1]")

    def block(self, seed, b):
        gen = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(b,)))
        u = gen.random((self.block_size, self.k))
        return (u < np.asarray(self.means)).astype(float).tolist()


class FunctionAdversary(ObliviousAdversary):
    """Wraps a pure function ``fn(seed, t, i) -> reward``."""

    def __init__(self, k: int, fn: Callable[[int, int, int], float], seed: int | None = None):
        super().__init__(k, seed)
        self.fn = fn

    def block(self, seed, b):
        lo = b * self.block_size + 1
        return [_check_rewards([self.fn(seed, t, i) for i in range(self.k)], self.k, t)
                for t in range(lo, lo + self.block_size)]


# -- adaptive -----------------------------------------------------------------


class AdaptiveAdversary(Environment):
    """Rewards chosen from the history of earlier rounds.

    ``strategy(t, history, rnd)`` must return K rewards in [0, 1]; ``rnd`` is an
    :class:`EnvRandom`. Out-of-range values raise rather than being clipped.
    """

    needs_history = True

    def __init__(self, k: int, strategy: Callable[[int, History, EnvRandom], Sequence[float]]):
        if k < 2:
            raise ConfigError("need at least two arms")
        self.k = k
        self.strategy = strategy

    def start(self, rng: np.random.Generator) -> Sampler:
        return _StrategySampler(self, EnvRandom(rng, self.k))


class _StrategySampler(Sampler):
    def __init__(self, adv: AdaptiveAdversary, rnd: EnvRandom):
        self.adv = adv
        self.rnd = rnd

    def draw(self, t, history):
        return _check_rewards(self.adv.strategy(t, history, self.rnd), self.adv.k, t)


class ProbeAdversary(AdaptiveAdversary):
    """Bernoulli rewards whose means follow a two-phase schedule.

    Phase one uses ``before``; from round ``switch + 1`` on, ``after``. Draws
    use the same uniform-row rule as :class:`StochasticEnvironment`, so with
    ``before == after`` the rewards equal those of the Bernoulli environment
    on the same stream.
    """

    needs_history = False

    def __init__(self, kind: str, before: Sequence[float], after: Sequence[float], switch: int):
        before = tuple(float(m) for m in before)
        after = tuple(float(m) for m in after)
        if len(before) != len(after):
            raise ConfigError("probe phases disagree on K")
        for m in before + after:
            if not 0.0 <= m <= 1.0:
                raise ConfigError(f"probe mean {m!r} outside [0, 1]")
        super().__init__(len(before), self._strategy)
        self.kind = kind
        self.before = before
        self.after = after
        self.switch = int(switch)

    def means_at(self, t: int) -> tuple[float, ...]:
        return self.before if t <= self.switch else self.after

    def _strategy(self, t, history, rnd):
        u = rnd.row()
        return [1.0 if x < m else 0.0 for x, m in zip(u, self.means_at(t))]

    def start(self, rng):
        return _ScheduleSampler(self, EnvRandom(rng, self.k))


class _ScheduleSampler(Sampler):
    __slots__ = ("before", "after", "switch", "rnd")

    def __init__(self, adv: ProbeAdversary, rnd: EnvRandom):
        self.before, self.after, self.switch = adv.before, adv.after, adv.switch
        self.rnd = rnd

    def draw(self, t, history):
        means = self.before if t <= self.switch else self.after
        return [1.0 if x < m else 0.0 for x, m in zip(self.rnd.row(), means)]


def make_probe_adversary(kind: str, params: dict) -> ProbeAdversary:
    """Build one of the adversaries that target SAO's consistency tests.

    Common params: ``means`` (phase-one Bernoulli means), ``horizon`` and
    ``at`` (switch after round ``round(at * horizon)``; default 0.5 for the
    flip, 0.25 otherwise). Kind-specific:

    stochastic-then-flip
        ``flipped``: phase-two means (default: ``means`` reversed).
    gap-inflater
        ``amount`` in [0, 1]: the best arm moves that fraction of the way to
        1, every other arm that fraction of the way to 0.
    gap-collapser
        ``amount`` in [0, 1]: every other arm moves that fraction of the way
        to the best mean.
    estimator-skewer
        ``gap``, ``low``, ``high``: phase one pays ``low + gap`` on the
        leader (arm ``leader``, default 0) and ``low`` elsewhere; phase two
        pays ``high`` on the leader and ``high - gap`` elsewhere. The
        cumulative gap stays put while the late rewards of rarely sampled
        arms pull their estimated averages away from their per-play averages.
    """
    params = dict(params)
    if kind not in PROBE_KINDS:
        raise ConfigError(f"unknown probe adversary {kind!r}; expected one of {PROBE_KINDS}", "probe")
    try:
        horizon = int(params.pop("horizon"))
    except KeyError:
        raise ConfigError("probe adversaries need the horizon", "horizon") from None
    at = float(params.pop("at", 0.5 if kind == "stochastic-then-flip" else 0.25))
    if not 0.0 <= at <= 1.0:
        raise ConfigError("switch fraction must lie in [0, 1]", "at")
    switch = int(round(at * horizon))

    if kind == "estimator-skewer":
        k = int(params.pop("k", 2))
        gap = float(params.pop("gap", 0.2))
        low = float(params.pop("low", 0.0))
        high = float(params.pop("high", 1.0))
        leader = int(params.pop("leader", 0))
        _no_extra(params, kind)
        if not 0 <= leader < k:
            raise ConfigError("leader index out of range", "leader")
        before = [low] * k
        after = [high - gap] * k
        before[leader] = low + gap
        after[leader] = high
        return ProbeAdversary(kind, before, after, switch)

    try:
        means = [float(m) for m in params.pop("means")]
    except KeyError:
        raise ConfigError(f"{kind} needs base means", "means") from None
    best = max(range(len(means)), key=lambda i: (means[i], -i))

    if kind == "stochastic-then-flip":
        after = [float(m) for m in params.pop("flipped", means[::-1])]
    else:
        amount = float(params.pop("amount", 1.0))
        if not 0.0 <= amount <= 1.0:
            raise ConfigError("amount must lie in [0, 1]", "amount")
        mb = means[best]
        if kind == "gap-inflater":
            after = [mb + amount * (1.0 - mb) if i == best else m * (1.0 - amount)
                     for i, m in enumerate(means)]
        else:
            after = [m + amount * (mb - m) for m in means]
    _no_extra(params, kind)
    return ProbeAdversary(kind, means, after, switch)


def _no_extra(params: dict, kind: str) -> None:
    if params:
        raise ConfigError(f"unknown parameter(s) for {kind}: {sorted(params)}", "params")
