"""Reference policies: UCB1, Exp3 and Exp3.P in their textbook forms."""

from __future__ import annotations

import math

from ..core import NO_TEST
from ..rng import sample_index
from .base import Policy


class UCB1(Policy):
    """Play each arm once, then argmax of mean + sqrt(2 ln t / T_i), ties to the lowest index."""

    name = "ucb1"

    def select(self, t, rng):
        self._check_round(t)
        plays = self.stats.plays
        k = self.k
        if t <= k and plays[t - 1] == 0:
            arm = t - 1
        else:
            bonus = 2.0 * math.log(t - 1)
            realized = self.stats.realized
            arm, best = 0, -1.0
            for i in range(k):
                n = plays[i]
                if n == 0:
                    arm = i
                    break
                v = realized[i] / n + math.sqrt(bonus / n)
                if v > best:
                    arm, best = i, v
        p = [0.0] * k
        p[arm] = 1.0
        self._p = p
        return p, arm

    def observe(self, t, arm, reward):
        self.stats.record(arm, reward, self._p[arm])
        self.last_event = NO_TEST


class _ExpWeights(Policy):
    """Shared machinery: log-domain weights mixed with the uniform distribution."""

    def __init__(self, k, horizon):
        super().__init__(k, horizon)
        self.log_weights = [0.0] * k
        self.gamma = 1.0
        self.eta = 1.0

    def distribution(self) -> list[float]:
        m = max(self.log_weights)
        w = [math.exp(x - m) for x in self.log_weights]
        s = sum(w)
        g = self.gamma
        mix = g / self.k
        return [(1.0 - g) * x / s + mix for x in w]

    def select(self, t, rng):
        self._check_round(t)
        p = self.distribution()
        self._p = p
        return p, sample_index(p, rng.uniform())


class Exp3(_ExpWeights):
    """Exponential weights with uniform mixing, gamma = min(1, sqrt(K ln K / ((e - 1) n)))."""

    name = "exp3"

    def __init__(self, k, horizon):
        super().__init__(k, horizon)
        self.gamma = min(1.0, math.sqrt(k * math.log(k) / ((math.e - 1.0) * horizon)))
        self.eta = self.gamma / k

    def observe(self, t, arm, reward):
        p = self._p[arm]
        self.stats.record(arm, reward, p)
        self.log_weights[arm] += self.eta * reward / p
        self.last_event = NO_TEST


class Exp3P(_ExpWeights):
    """Exp3.P for a known horizon and confidence delta.

    Every arm's estimate receives an optimistic bias:
    ``G_i += (g * 1{I=i} + bias) / p_i`` with

        bias  = sqrt(ln(K/delta) / (n K))
        eta   = 0.95 sqrt(ln K / (n K))
        gamma = min(1, 1.05 sqrt(K ln K / n))

    With these constants the regret over the n rounds it runs is at most
    5.15 sqrt(n K ln(K/delta)) with probability 1 - delta.
    """

    name = "exp3p"

    def __init__(self, k, horizon, delta=0.05):
        super().__init__(k, horizon)
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        self.delta = delta
        nk = horizon * k
        self.bias = math.sqrt(math.log(k / delta) / nk)
        self.eta = 0.95 * math.sqrt(math.log(k) / nk)
        self.gamma = min(1.0, 1.05 * math.sqrt(k * math.log(k) / horizon))
        self.estimates = [0.0] * k

    def observe(self, t, arm, reward):
        p = self._p
        self.stats.record(arm, reward, p[arm])
        b = self.bias
        est = self.estimates
        lw = self.log_weights
        eta = self.eta
        for i in range(self.k):
            inc = (reward + b) / p[i] if i == arm else b / p[i]
            est[i] += inc
            lw[i] += eta * inc
        self.last_event = NO_TEST


def exp3p_envelope(n: int, k: int, delta: float) -> float:
    """5.15 sqrt(n K ln(K/delta)): high-probability regret ceiling of :class:`Exp3P`."""
    return 5.15 * math.sqrt(n * k * math.log(k / delta))
