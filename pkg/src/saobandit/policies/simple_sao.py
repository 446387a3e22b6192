"""Two-armed SimpleSAO: explore uniformly, exploit while the data stay consistent.

Phases run strictly forward:

``exploration``
    p = (1/2, 1/2) until ``t > floor`` and ``|H~_1 - H~_2| >= 24 C / sqrt(t)``.
    The current round becomes ``tau*`` and the arm with the larger estimate
    (lowest index on ties) becomes the leader.
``exploitation``
    the other arm is drawn with probability ``tau* / (2t)``. After every round
    the gap must stay within ``[8 C, 40 C] / sqrt(tau*)`` and each arm's
    estimated and realized averages must agree to within ``6 C / sqrt(t)``
    (leader) or ``6 C / sqrt(tau*)`` (other arm).
``adversarial``
    Exp3.P for the remaining rounds.

``C`` defaults to ``12 ln n``; ``floor`` defaults to ``8 C^2``.
"""

from __future__ import annotations

import math

from ..core import COND_ESTIMATES, COND_GAP, EXPLORATION_EXIT, NO_TEST
from ..rng import sample_index
from .base import Policy
from .baselines import Exp3P

EXPLORATION = "exploration"
EXPLOITATION = "exploitation"
ADVERSARIAL = "adversarial"
PHASES = (EXPLORATION, EXPLOITATION, ADVERSARIAL)


class SimpleSAO(Policy):
    name = "simple-sao"

    def __init__(self, horizon: int, *, ccrn: float | None = None, ccrn_multiplier: float = 12.0,
                 exploration_floor_multiplier: float = 8.0, delta: float = 0.05):
        super().__init__(2, horizon)
        self.ccrn = float(ccrn) if ccrn is not None else ccrn_multiplier * math.log(horizon)
        if not self.ccrn > 0.0:
            raise ValueError("C_crn must be positive")
        self.exploration_floor = exploration_floor_multiplier * self.ccrn ** 2
        self.delta = delta
        self._phase = EXPLORATION
        self.tau_star: int | None = None
        self.leader: int | None = None
        self.tau0 = horizon
        self.exp3p: Exp3P | None = None
        self.switch_test = NO_TEST
        self._p = [0.5, 0.5]

    @property
    def phase(self) -> str:
        return self._phase

    @property
    def switched(self) -> bool:
        return self.exp3p is not None

    def select(self, t, rng):
        self._check_round(t)
        if self.exp3p is not None:
            p, arm = self.exp3p.select(t - self.tau0, rng)
        else:
            if self._phase == EXPLOITATION:
                other = self.tau_star / (2.0 * t)
                p = [0.0, 0.0]
                p[self.leader] = 1.0 - other
                p[1 - self.leader] = other
            else:
                p = [0.5, 0.5]
            arm = sample_index(p, rng.uniform())
        self._p = p
        return p, arm

    def observe(self, t, arm, reward):
        st = self.stats
        st.record(arm, reward, self._p[arm])
        self.last_event = NO_TEST
        if self.exp3p is not None:
            self.exp3p.observe(t - self.tau0, arm, reward)
            return
        C = self.ccrn
        h0, h1 = st.estimated[0] / t, st.estimated[1] / t
        if self._phase == EXPLORATION:
            if t > self.exploration_floor and abs(h0 - h1) >= 24.0 * C / math.sqrt(t):
                self.tau_star = t
                self.leader = 0 if h0 >= h1 else 1
                self._phase = EXPLOITATION
                self.last_event = EXPLORATION_EXIT
            return
        lead, other = self.leader, 1 - self.leader
        h_lead, h_other = (h0, h1) if lead == 0 else (h1, h0)
        root = math.sqrt(self.tau_star)
        gap = h_lead - h_other
        if not 8.0 * C / root <= gap <= 40.0 * C / root:
            self._switch(t, COND_GAP)
            return
        n_lead, n_other = st.plays[lead], st.plays[other]
        if n_lead and abs(h_lead - st.realized[lead] / n_lead) > 6.0 * C / math.sqrt(t):
            self._switch(t, COND_ESTIMATES)
        elif n_other and abs(h_other - st.realized[other] / n_other) > 6.0 * C / root:
            self._switch(t, COND_ESTIMATES)

    def _switch(self, t: int, test: str) -> None:
        self._phase = ADVERSARIAL
        self.tau0 = t
        self.switch_test = test
        self.last_event = test
        self.exp3p = Exp3P(2, max(1, self.horizon - t), self.delta)
