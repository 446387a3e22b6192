"""Per-arm tallies, the importance-weighted estimator, and regret accounting.

Notation follows the usual bandit conventions. For arm ``i`` after ``t`` rounds:

* ``plays[i]``      number of times arm i was chosen, T_i(t)
* ``realized[i]``   reward actually collected from arm i
* ``estimated[i]``  importance-weighted cumulative reward, sum of g * 1{I=i} / p_i

Policies only ever see :class:`ArmStatistics`. The environment-side sums of
every arm's reward live in :class:`RegretLedger`, which the harness owns.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import (
    InvalidProbabilityError,
    InvalidRewardError,
    ModelMismatchError,
    UndefinedAverageError,
)

SIMPLEX_TOL = 1e-9

# identifiers recorded in RoundRecord.fired_test
DEACTIVATE = "deactivate-7"
CONSISTENCY_ESTIMATES = "consistency-8"
CONSISTENCY_DRIFT_UP = "consistency-9"
CONSISTENCY_DRIFT_DOWN = "consistency-10"
EXPLORATION_EXIT = "exploration-exit-1"
COND_GAP = "cond-2"
COND_ESTIMATES = "cond-3"
NO_TEST = "none"
FIRED_TESTS = (
    DEACTIVATE,
    CONSISTENCY_ESTIMATES,
    CONSISTENCY_DRIFT_UP,
    CONSISTENCY_DRIFT_DOWN,
    EXPLORATION_EXIT,
    COND_GAP,
    COND_ESTIMATES,
    NO_TEST,
)


@dataclass
class ArmStatistics:
    k: int
    t: int = 0
    plays: list[int] = field(default_factory=list)
    realized: list[float] = field(default_factory=list)
    estimated: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("need at least one arm")
        if not self.plays:
            self.plays = [0] * self.k
            self.realized = [0.0] * self.k
            self.estimated = [0.0] * self.k

    def record(self, arm: int, reward: float, prob: float) -> None:
        if not prob > 0.0:
            raise InvalidProbabilityError(f"arm {arm} played with probability {prob!r}")
        if not 0.0 <= reward <= 1.0:
            raise InvalidRewardError(f"reward {reward!r} outside [0, 1]")
        self.t += 1
        self.plays[arm] += 1
        self.realized[arm] += reward
        self.estimated[arm] += reward / prob

    def estimated_average(self, arm: int, t: int | None = None) -> float:
        t = self.t if t is None else t
        if t < 1:
            raise UndefinedAverageError("estimated average needs t >= 1")
        return self.estimated[arm] / t

    def realized_average(self, arm: int) -> float:
        n = self.plays[arm]
        if n == 0:
            raise UndefinedAverageError(f"arm {arm} has not been played")
        return self.realized[arm] / n

    def copy(self) -> "ArmStatistics":
        return ArmStatistics(self.k, self.t, list(self.plays), list(self.realized), list(self.estimated))


def record_round(stats: ArmStatistics, arm: int, reward: float, prob: float) -> ArmStatistics:
    """Apply one observed round to ``stats`` in place and return it."""
    if not 0 <= arm < stats.k:
        raise IndexError(f"arm {arm} out of range for K={stats.k}")
    stats.record(arm, reward, prob)
    return stats


def estimated_average(stats: ArmStatistics, arm: int, t: int | None = None) -> float:
    return stats.estimated_average(arm, t)


def realized_average(stats: ArmStatistics, arm: int) -> float:
    return stats.realized_average(arm)


@dataclass(frozen=True)
class RoundRecord:
    t: int
    p: tuple[float, ...]
    chosen: int
    reward: float
    phase: str
    fired_test: str = NO_TEST

    def check(self) -> None:
        if any(x < 0.0 for x in self.p) or abs(math.fsum(self.p) - 1.0) > SIMPLEX_TOL:
            raise InvalidProbabilityError(f"round {self.t}: p={self.p} is not a simplex")
        if not 0.0 <= self.reward <= 1.0:
            raise InvalidRewardError(f"round {self.t}: reward {self.reward!r} outside [0, 1]")
        if self.fired_test not in FIRED_TESTS:
            raise ValueError(f"round {self.t}: unknown test id {self.fired_test!r}")


@dataclass
class RegretLedger:
    """Environment-side accounting; never handed to a policy."""

    k: int
    mu: tuple[float, ...] | None = None
    t: int = 0
    benchmark: list[float] = field(default_factory=list)
    collected: float = 0.0
    pseudo_collected: float = 0.0
    gap_sum: float = 0.0

    def __post_init__(self):
        if not self.benchmark:
            self.benchmark = [0.0] * self.k
        if self.mu is not None:
            self.mu = tuple(float(m) for m in self.mu)
            if len(self.mu) != self.k:
                raise ValueError("mu must have one entry per arm")
            self._mu_star = max(self.mu)

    def add_round(self, rewards: Sequence[float], arm: int) -> None:
        self.t += 1
        self.benchmark = [b + g for b, g in zip(self.benchmark, rewards)]
        self.collected += rewards[arm]
        if self.mu is not None:
            self.pseudo_collected += self.mu[arm]
            self.gap_sum += self._mu_star - self.mu[arm]

    def best_arm(self) -> int:
        # lowest index among ties
        best = 0
        for i in range(1, self.k):
            if self.benchmark[i] > self.benchmark[best]:
                best = i
        return best

    def copy(self) -> "RegretLedger":
        return RegretLedger(self.k, self.mu, self.t, list(self.benchmark), self.collected,
                            self.pseudo_collected, self.gap_sum)


def adversarial_regret(ledger: RegretLedger) -> float:
    """Best fixed arm's total minus the collected total; may be negative."""
    return max(ledger.benchmark) - ledger.collected


def pseudo_regret(ledger: RegretLedger) -> float:
    """Sum over rounds of mu* - mu_{I_t}.

    Accumulated gap by gap, so it is exactly zero for an always-best trace and
    never negative.
    """
    if ledger.mu is None:
        raise ModelMismatchError("pseudo-regret needs per-arm means (stochastic run)")
    return ledger.gap_sum


def replay_statistics(trace: Iterable[RoundRecord], k: int) -> ArmStatistics:
    """Rebuild the policy-side tallies from a trace."""
    stats = ArmStatistics(k)
    for rec in trace:
        stats.record(rec.chosen, rec.reward, rec.p[rec.chosen])
    return stats


def replay_ledger(trace: Iterable[RoundRecord], reward_rows: Sequence[Sequence[float]], k: int,
                  mu: Sequence[float] | None = None) -> RegretLedger:
    """Recompute a ledger from a play trace and the full reward matrix."""
    ledger = RegretLedger(k, tuple(mu) if mu is not None else None)
    for rec, row in zip(trace, reward_rows):
        ledger.add_round(row, rec.chosen)
    return ledger


# -- CSV trace format ---------------------------------------------------------

def _fmt(x: float) -> str:
    return format(x, ".17g")


def trace_header(k: int) -> list[str]:
    return ["t", "phase", "chosen", "reward", "fired_test"] + [f"p_{i}" for i in range(k)]


def trace_to_csv(trace: Sequence[RoundRecord], k: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trace_header(k))
    for r in trace:
        w.writerow([r.t, r.phase, r.chosen, _fmt(r.reward), r.fired_test] + [_fmt(x) for x in r.p])
    return buf.getvalue()


def write_trace(path: str | os.PathLike, trace: Sequence[RoundRecord], k: int) -> None:
    from .outputs import atomic_write_text

    atomic_write_text(path, trace_to_csv(trace, k))


def read_trace(path: str | os.PathLike) -> tuple[list[RoundRecord], int]:
    """Parse a trace CSV; returns the records and K."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty trace file")
    header = rows[0]
    k = len(header) - 5
    if k < 1 or header != trace_header(k):
        raise ValueError(f"{path}: unexpected trace header {header}")
    out = []
    for row in rows[1:]:
        out.append(RoundRecord(
            t=int(row[0]),
            phase=row[1],
            chosen=int(row[2]),
            reward=float(row[3]),
            fired_test=row[4],
            p=tuple(float(x) for x in row[5:]),
        ))
    return out, k
