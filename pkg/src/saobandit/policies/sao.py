"""SAO: stochastic-and-adversarial optimal play for K arms.

The policy starts uniform over an active set A. Each round it runs, arm by arm
in increasing index:

* a deactivation test: an active arm whose estimated average trails the best
  active one by more than ``6 s r(t)`` leaves A, freezing ``q_i = p_i`` and
  ``tau_i = t``;
* three consistency tests, any of which hands the rest of the horizon to
  Exp3.P:

  - ``consistency-8``: estimated and realized averages disagree;
  - ``consistency-9``: a deactivated arm now looks far worse than it did;
  - ``consistency-10``: a deactivated arm no longer looks clearly worse.

Here ``r(x) = sqrt(4 K L / x + 5 (K L / x)^2)`` with ``L = ln beta``. The
threshold scale ``s`` is 1 for the proven constants; experiment mode shrinks it
so deactivation happens at laptop-sized horizons. Deactivated arms keep
probability ``q_i tau_i / (t + 1)`` and the active arms share the remainder.
"""

from __future__ import annotations

import math

from ..core import (
    CONSISTENCY_DRIFT_DOWN,
    CONSISTENCY_DRIFT_UP,
    CONSISTENCY_ESTIMATES,
    DEACTIVATE,
    NO_TEST,
)
from ..rng import sample_index
from .base import Policy
from .baselines import Exp3P

BETA_MODES = ("n4", "high-prob", "n", "custom")


def resolve_beta(mode: str, n: int, k: int, delta: float = 0.05, beta: float | None = None) -> float:
    """beta for a named mode: n^4, 10 K n^3 / delta, n, or an explicit value."""
    if mode == "n4":
        return float(n) ** 4
    if mode == "high-prob":
        return 10.0 * k * float(n) ** 3 / delta
    if mode == "n":
        return float(n)
    if mode == "custom":
        if beta is None:
            raise ValueError("beta_mode 'custom' needs an explicit beta")
        return float(beta)
    raise ValueError(f"unknown beta_mode {mode!r}")


def deactivation_radical(k: int, log_beta: float, t: float) -> float:
    """sqrt(4 K L / t + 5 (K L / t)^2)."""
    x = k * log_beta / t
    return math.sqrt(4.0 * x + 5.0 * x * x)


def consistency_radical(k: int, log_beta: float, t: int, tau: int, q: float | None) -> float:
    """Second radical of the estimate-consistency threshold.

    ``t* = min(tau, t)``; the frozen-probability term vanishes while the arm
    is active (``tau >= t``), in which case ``q`` is ignored.
    """
    ts = min(tau, t)
    extra = 0.0 if ts == t else (t - ts) / (q * tau * t)
    x = k * log_beta / ts
    return math.sqrt(4.0 * (k * ts / (t * t) + extra) * log_beta + 5.0 * x * x)


def consistency_threshold(k, log_beta, t, plays, tau, q) -> float:
    return math.sqrt(2.0 * log_beta / plays) + consistency_radical(k, log_beta, t, tau, q)


class SAO(Policy):
    name = "sao"

    def __init__(self, k: int, horizon: int, beta: float, *, delta: float = 0.05,
                 threshold_scale: float = 1.0, snapshot: bool = False):
        super().__init__(k, horizon)
        if not beta > 1.0:
            raise ValueError(f"beta must exceed 1, got {beta!r}")
        if not threshold_scale > 0.0:
            raise ValueError("threshold_scale must be positive")
        self.beta = float(beta)
        self.log_beta = math.log(self.beta)
        self.delta = delta
        self.scale = threshold_scale
        self.snapshot = snapshot
        self.active = [True] * k
        self.n_active = k
        self.tau = [horizon] * k
        self.q: list[float | None] = [None] * k
        self.tau0 = horizon
        self.exp3p: Exp3P | None = None
        self.switch_test = NO_TEST
        # thresholds for the drift tests, fixed once an arm is deactivated
        self._up = [math.inf] * k
        self._down = [0.0] * k

    @property
    def phase(self) -> str:
        return "exp3p" if self.exp3p is not None else "sao"

    @property
    def switched(self) -> bool:
        return self.exp3p is not None

    def deactivated(self) -> list[int]:
        return [i for i in range(self.k) if not self.active[i]]

    def select(self, t, rng):
        self._check_round(t)
        if self.exp3p is not None:
            p, arm = self.exp3p.select(t - self.tau0, rng)
            self._p = p
            return p, arm
        p = self._p
        return p, sample_index(p, rng.uniform())

    def observe(self, t, arm, reward):
        self.stats.record(arm, reward, self._p[arm])
        if self.exp3p is not None:
            self.exp3p.observe(t - self.tau0, arm, reward)
            self.last_event = NO_TEST
            return
        event = self._tests(t)
        if self.exp3p is None and self.n_active < self.k:
            self._update(t)
        self.last_event = event

    def _tests(self, t: int) -> str:
        k, L, s = self.k, self.log_beta, self.scale
        st = self.stats
        inv_t = 1.0 / t
        H = [g * inv_t for g in st.estimated]
        plays, realized = st.plays, st.realized
        active, tau, q = self.active, self.tau, self.q
        r_t = deactivation_radical(k, L, t)
        thr = 6.0 * s * r_t
        if self.n_active == k:
            hmax = max(H)
        else:
            hmax = max(H[j] for j in range(k) if active[j])
        snapshot = self.snapshot
        was_active = list(active) if snapshot else active
        fresh = []
        event = NO_TEST
        two_l = 2.0 * L
        for i in range(k):
            h = H[i]
            if active[i] and hmax - h > thr:
                # h < hmax strictly, so the live maximum over A is unchanged
                if snapshot:
                    fresh.append(i)
                else:
                    self._deactivate(i, t)
                event = DEACTIVATE
            n_i = plays[i]
            if n_i:
                if tau[i] >= t:
                    bound = math.sqrt(two_l / n_i) + r_t
                else:
                    bound = consistency_threshold(k, L, t, n_i, tau[i], q[i])
                if abs(h - realized[i] / n_i) > bound:
                    return self._switch(t, CONSISTENCY_ESTIMATES)
            if not was_active[i]:
                gap = hmax - h
                if gap > self._up[i]:
                    return self._switch(t, CONSISTENCY_DRIFT_UP)
                if gap <= self._down[i]:
                    return self._switch(t, CONSISTENCY_DRIFT_DOWN)
        for i in fresh:
            self._deactivate(i, t)
        return event

    def _deactivate(self, i: int, t: int) -> None:
        k, L, s = self.k, self.log_beta, self.scale
        self.active[i] = False
        self.n_active -= 1
        self.tau[i] = t
        self.q[i] = self._p[i]
        self._up[i] = 10.0 * s * deactivation_radical(k, L, t - 1) if t >= 2 else math.inf
        self._down[i] = 2.0 * s * deactivation_radical(k, L, t)

    def _switch(self, t: int, test: str) -> str:
        self.tau0 = t
        self.switch_test = test
        self.exp3p = Exp3P(self.k, max(1, self.horizon - t), self.delta)
        return test

    def _update(self, t: int) -> None:
        d = t + 1
        p = [0.0] * self.k
        frozen = 0.0
        for i in range(self.k):
            if not self.active[i]:
                p[i] = self.q[i] * self.tau[i] / d
                frozen += p[i]
        share = (1.0 - frozen) / self.n_active
        for i in range(self.k):
            if self.active[i]:
                p[i] = share
        self._p = p
