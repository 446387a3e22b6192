"""Common policy interface.

A policy is driven by the harness once per round::

    p, arm = policy.select(t, rng)     # rng: UniformStream
    policy.observe(t, arm, reward)     # exactly once, with the selected arm

``p`` is the full selection distribution used for the draw. Every policy keeps
an :class:`ArmStatistics` so the importance-weighted tallies are comparable
across policies. After ``observe``, ``last_event`` names the test that fired
that round (or ``"none"``) and ``phase`` tags the round for the trace.
"""

from __future__ import annotations

from ..core import NO_TEST, ArmStatistics
from ..errors import HorizonExceededError
from ..rng import UniformStream


class Policy:
    name = "policy"

    def __init__(self, k: int, horizon: int):
        if k < 2:
            raise ValueError("need at least two arms")
        if horizon < k:
            raise ValueError(f"horizon n={horizon} must be at least K={k}")
        self.k = k
        self.horizon = horizon
        self.stats = ArmStatistics(k)
        self.last_event = NO_TEST
        self._p: list[float] = [1.0 / k] * k

    @property
    def phase(self) -> str:
        return self.name

    @property
    def p(self) -> list[float]:
        return list(self._p)

    def _check_round(self, t: int) -> None:
        if t > self.horizon:
            raise HorizonExceededError(f"round {t} beyond horizon {self.horizon}")

    def select(self, t: int, rng: UniformStream) -> tuple[list[float], int]:
        raise NotImplementedError

    def observe(self, t: int, arm: int, reward: float) -> None:
        raise NotImplementedError
