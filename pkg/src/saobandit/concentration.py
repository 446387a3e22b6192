"""Concentration inequalities as radius evaluators plus Monte Carlo checks.

The radii here are the templates for every threshold SAO and SimpleSAO
compare against. Each bound also has a validator: draw many independent
sequences satisfying the bound's hypotheses and count how often the deviation
exceeds the radius.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import HypothesisViolationError, OutOfDomainError

BOUND_KINDS = ("chernoff", "hoeffding-azuma", "bernstein-martingale", "bernstein-union")


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise OutOfDomainError(f"delta must lie in (0, 1), got {delta!r}")


def chernoff_radius(mu: float, C: float) -> float:
    """C * max(1, sqrt(mu)); exceeded with probability below 2 exp(-C/3)."""
    if not C > 1.0:
        raise OutOfDomainError(f"Chernoff constant must exceed 1, got {C!r}")
    if mu < 0.0:
        raise OutOfDomainError(f"mean must be nonnegative, got {mu!r}")
    return C * max(1.0, math.sqrt(mu))


def chernoff_failure(C: float) -> float:
    if not C > 1.0:
        raise OutOfDomainError(f"Chernoff constant must exceed 1, got {C!r}")
    return 2.0 * math.exp(-C / 3.0)


def multiplicative_chernoff_radius(mu: float, beta: float) -> float:
    """beta * max(beta, sqrt(mu)), the two-case form the unified radius is derived from."""
    if beta <= 0.0 or mu < 0.0:
        raise OutOfDomainError("need beta > 0 and mu >= 0")
    return beta * max(beta, math.sqrt(mu))


def hoeffding_azuma_radius(c: Sequence[float], delta: float) -> float:
    """sqrt(log(1/delta) / 2 * sum c_t^2) for increments in ranges of width c_t."""
    _check_delta(delta)
    c = list(c)
    if not c:
        warnings.warn("empty range list: Hoeffding-Azuma radius is vacuously 0", stacklevel=2)
        return 0.0
    if any(not x > 0.0 for x in c):
        raise OutOfDomainError("every range c_t must be positive")
    return math.sqrt(math.log(1.0 / delta) / 2.0 * math.fsum(x * x for x in c))


def bernstein_radius(V: float, b: float, delta: float) -> float:
    """sqrt(2 V log(1/delta)) + b log(1/delta) / 3, valid on the event V_n <= V."""
    _check_delta(delta)
    if V < 0.0 or not b > 0.0:
        raise OutOfDomainError("need V >= 0 and b > 0")
    ld = math.log(1.0 / delta)
    return math.sqrt(2.0 * V * ld) + b * ld / 3.0


def bernstein_union_radius(V_n: float, b: float, n: int, delta: float) -> float:
    """sqrt(4 V_n log(n/delta) + 5 b^2 log^2(n/delta)) with the realized variance V_n."""
    _check_delta(delta)
    if V_n < 0.0 or b < 0.0 or n < 1:
        raise OutOfDomainError("need V_n >= 0, b >= 0 and n >= 1")
    L = math.log(n / delta)
    return math.sqrt(4.0 * V_n * L + 5.0 * b * b * L * L)


@dataclass(frozen=True)
class BoundSpec:
    """One inequality with its parameters.

    chernoff: ``n``, ``C``. hoeffding-azuma: ``n``, ``delta``, ``c`` (common
    range width). bernstein-martingale: ``n``, ``delta``, ``b``, ``V``.
    bernstein-union: ``n``, ``delta``, ``b``.
    """

    kind: str
    n: int
    C: float | None = None
    delta: float | None = None
    b: float | None = None
    V: float | None = None
    c: float | None = None

    def __post_init__(self):
        if self.kind not in BOUND_KINDS:
            raise OutOfDomainError(f"unknown bound kind {self.kind!r}")
        if self.n < 1:
            raise OutOfDomainError("n must be at least 1")
        if self.kind == "chernoff":
            chernoff_failure(self.C if self.C is not None else 0.0)
        else:
            _check_delta(self.delta if self.delta is not None else 0.0)
        if self.kind == "hoeffding-azuma" and not (self.c or 0) > 0:
            raise OutOfDomainError("hoeffding-azuma needs a positive range c")
        if self.kind in ("bernstein-martingale", "bernstein-union") and not (self.b or 0) > 0:
            raise OutOfDomainError(f"{self.kind} needs b > 0")
        if self.kind == "bernstein-martingale" and (self.V is None or self.V < 0):
            raise OutOfDomainError("bernstein-martingale needs V >= 0")

    @property
    def failure_probability(self) -> float:
        if self.kind == "chernoff":
            return chernoff_failure(self.C)
        return self.delta

    def describe(self) -> str:
        keys = ("n", "C", "delta", "b", "V", "c")
        return ";".join(f"{k}={getattr(self, k):g}" for k in keys if getattr(self, k) is not None)


@dataclass
class Batch:
    """Per-trial summaries of sampled sequences.

    ``total``: sum of the sequence. ``mean``: its expectation (independent
    sums) or 0 (martingale differences). ``variance``: realized conditional
    variance sum V_n. The remaining fields record the extremes the sampler
    actually produced, for hypothesis checks.
    """

    total: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    max_abs: float = 0.0
    min_value: float = 0.0
    max_value: float = 0.0
    max_range: float = 0.0
    independent: bool = False


class Sampler:
    name = "sampler"

    def run(self, n: int, trials: int, rng: np.random.Generator) -> Batch:
        raise NotImplementedError


@dataclass
class BernoulliSum(Sampler):
    """Independent Bernoulli(p) summands."""

    p: float = 0.5
    name: str = "bernoulli"

    def run(self, n, trials, rng):
        total = rng.binomial(n, self.p, size=trials).astype(float)
        mu = np.full(trials, n * self.p)
        return Batch(total, mu, np.full(trials, n * self.p * (1 - self.p)),
                     max_abs=1.0 if self.p > 0 else 0.0, min_value=0.0,
                     max_value=1.0 if self.p > 0 else 0.0, max_range=1.0, independent=True)


@dataclass
class ConstantSum(Sampler):
    """Every summand equals ``value``; no randomness at all."""

    value: float = 0.0
    name: str = "constant"

    def run(self, n, trials, rng):
        total = np.full(trials, n * self.value)
        return Batch(total, total.copy(), np.zeros(trials), max_abs=abs(self.value),
                     min_value=self.value, max_value=self.value, max_range=0.0, independent=True)


@dataclass
class ReinforcedBernoulli(Sampler):
    """Martingale differences Y_t - m_t with Y_t ~ Bernoulli(m_t).

    m_t drifts with the running fraction of ones, so the increments are
    neither independent nor identically distributed. Each increment lies in
    [-m_t, 1 - m_t], a window of width 1.
    """

    base: float = 0.5
    pull: float = 0.4
    name: str = "reinforced-bernoulli"

    def run(self, n, trials, rng):
        ones = np.zeros(trials)
        total = np.zeros(trials)
        var = np.zeros(trials)
        max_abs = 0.0
        for t in range(n):
            frac = ones / t if t else np.full(trials, 0.5)
            m = np.clip(self.base + self.pull * (frac - 0.5), 0.05, 0.95)
            y = (rng.random(trials) < m).astype(float)
            x = y - m
            ones += y
            total += x
            var += m * (1.0 - m)
            max_abs = max(max_abs, float(np.abs(x).max()))
        return Batch(total, np.zeros(trials), var, max_abs=max_abs, max_range=1.0)


@dataclass
class LazyRademacher(Sampler):
    """X_t = +-1 with probability h_t / 2 each, else 0.

    The activity h_t depends on whether the previous step moved, giving a
    random conditional variance sum. Increments lie in [-1, 1].
    """

    busy: float = 0.9
    idle: float = 0.3
    name: str = "lazy-rademacher"

    def run(self, n, trials, rng):
        total = np.zeros(trials)
        var = np.zeros(trials)
        moved = np.ones(trials, dtype=bool)
        for _ in range(n):
            h = np.where(moved, self.busy, self.idle)
            u = rng.random(trials)
            x = np.where(u < h / 2, 1.0, np.where(u < h, -1.0, 0.0))
            moved = x != 0.0
            total += x
            var += h
        return Batch(total, np.zeros(trials), var, max_abs=1.0, min_value=-1.0, max_value=1.0,
                     max_range=2.0)


@dataclass
class ImportanceWeighted(Sampler):
    """X_t = (Z_t / p_t - 1) g_t with Z_t ~ Bernoulli(p_t), p_t in [1/K, 1].

    The estimator-error martingale behind importance weighting. p_t and g_t
    react to the previous draw. |X_t| <= K - 1 and the conditional variance is
    g_t^2 (1 - p_t) / p_t.
    """

    k: int = 3
    name: str = "importance-weighted"

    def run(self, n, trials, rng):
        lo = 1.0 / self.k
        p = np.full(trials, lo)
        total = np.zeros(trials)
        var = np.zeros(trials)
        max_abs = 0.0
        for _ in range(n):
            g = np.where(p > 0.5, 0.3, 0.9)
            z = (rng.random(trials) < p).astype(float)
            x = (z / p - 1.0) * g
            total += x
            var += g * g * (1.0 - p) / p
            max_abs = max(max_abs, float(np.abs(x).max()))
            p = np.where(z > 0, lo, np.minimum(1.0, p + 0.25))
        return Batch(total, np.zeros(trials), var, max_abs=max_abs, max_range=float(self.k))


def _check_hypotheses(bound: BoundSpec, batch: Batch) -> None:
    if bound.kind == "chernoff":
        if not batch.independent:
            raise HypothesisViolationError("Chernoff bound needs independent summands")
        if batch.min_value < 0.0 or batch.max_value > 1.0:
            raise HypothesisViolationError("Chernoff bound needs summands in [0, 1]")
    elif bound.kind == "hoeffding-azuma":
        if batch.max_range > bound.c + 1e-12:
            raise HypothesisViolationError(
                f"increments span a window of width {batch.max_range}, above c={bound.c}")
    elif batch.max_abs > bound.b + 1e-12:
        raise HypothesisViolationError(f"|X_t| reached {batch.max_abs}, above b={bound.b}")


def violations(bound: BoundSpec, batch: Batch) -> np.ndarray:
    """Boolean mask of trials where the deviation beat the radius."""
    if bound.kind == "chernoff":
        chernoff_radius(float(batch.mean.min()), bound.C)  # domain check
        r = bound.C * np.maximum(1.0, np.sqrt(batch.mean))
        return np.abs(batch.total - batch.mean) > r
    if bound.kind == "hoeffding-azuma":
        return batch.total > hoeffding_azuma_radius([bound.c] * bound.n, bound.delta)
    if bound.kind == "bernstein-martingale":
        r = bernstein_radius(bound.V, bound.b, bound.delta)
        return (batch.total > r) & (batch.variance <= bound.V)
    L = math.log(bound.n / bound.delta)
    r = np.sqrt(4.0 * batch.variance * L + 5.0 * bound.b ** 2 * L * L)
    return batch.total > r


def empirical_violation_rate(bound: BoundSpec, process: Sampler, trials: int,
                             rng: np.random.Generator) -> float:
    if trials < 1000:
        raise OutOfDomainError("need at least 1000 trials for a meaningful rate")
    batch = process.run(bound.n, trials, rng)
    _check_hypotheses(bound, batch)
    return float(np.mean(violations(bound, batch)))


def monte_carlo_slack(rate: float, trials: int, sigmas: float = 3.0) -> float:
    return sigmas * math.sqrt(rate * (1.0 - rate) / trials)


@dataclass
class ValidationResult:
    name: str
    bound: BoundSpec
    sampler: str
    failure_probability: float
    rate: float
    trials: int
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = self.rate <= self.failure_probability + monte_carlo_slack(self.rate, self.trials)


def default_suite() -> list[tuple[str, BoundSpec, Sampler]]:
    """Every bound paired with samplers that satisfy its hypotheses."""
    return [
        ("chernoff", BoundSpec("chernoff", n=100, C=9.0), BernoulliSum(0.5)),
        ("chernoff", BoundSpec("chernoff", n=100, C=3.0), BernoulliSum(0.01)),
        ("chernoff", BoundSpec("chernoff", n=100, C=9.0), ConstantSum(0.0)),
        ("hoeffding-azuma", BoundSpec("hoeffding-azuma", n=200, delta=0.05, c=1.0),
         ReinforcedBernoulli()),
        ("hoeffding-azuma", BoundSpec("hoeffding-azuma", n=200, delta=0.05, c=2.0),
         LazyRademacher(busy=1.0, idle=1.0)),
        ("bernstein-martingale", BoundSpec("bernstein-martingale", n=200, delta=0.05, b=1.0, V=120.0),
         LazyRademacher()),
        ("bernstein-union", BoundSpec("bernstein-union", n=200, delta=0.05, b=3.0),
         ImportanceWeighted(k=3)),
        ("bernstein-union", BoundSpec("bernstein-union", n=200, delta=0.05, b=1.0),
         ReinforcedBernoulli()),
    ]


def validate_all(trials: int, rng: np.random.Generator,
                 suite: list[tuple[str, BoundSpec, Sampler]] | None = None) -> list[ValidationResult]:
    out = []
    for name, bound, sampler in suite or default_suite():
        rate = empirical_violation_rate(bound, sampler, trials, rng)
        out.append(ValidationResult(name, bound, sampler.name, bound.failure_probability, rate, trials))
    return out
