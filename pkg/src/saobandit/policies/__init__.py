"""Bandit policies behind a common select/observe interface."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .base import Policy
from .baselines import UCB1, Exp3, Exp3P, exp3p_envelope
from .sao import (
    BETA_MODES,
    SAO,
    consistency_radical,
    consistency_threshold,
    deactivation_radical,
    resolve_beta,
)
from .simple_sao import ADVERSARIAL, EXPLOITATION, EXPLORATION, PHASES, SimpleSAO

POLICY_NAMES = ("sao", "simple-sao", "ucb1", "exp3", "exp3p")


@dataclass(frozen=True)
class PolicySpec:
    """Fully resolved constructor arguments for one policy.

    Fields that do not apply to ``policy`` are ignored by :meth:`build`.
    """

    policy: str
    label: str = ""
    beta_mode: str = "n4"
    beta: float | None = None
    delta: float = 0.05
    threshold_scale: float = 1.0
    snapshot: bool = False
    ccrn: float | None = None
    ccrn_multiplier: float = 12.0
    exploration_floor_multiplier: float = 8.0

    def __post_init__(self):
        if self.policy not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if not self.label:
            object.__setattr__(self, "label", self.policy)

    def resolved_beta(self, n: int, k: int) -> float:
        return resolve_beta(self.beta_mode, n, k, self.delta, self.beta)

    def build(self, k: int, n: int) -> Policy:
        if self.policy == "sao":
            return SAO(k, n, self.resolved_beta(n, k), delta=self.delta,
                       threshold_scale=self.threshold_scale, snapshot=self.snapshot)
        if self.policy == "simple-sao":
            if k != 2:
                raise ValueError(f"simple-sao is defined for K = 2 only, got K = {k}")
            return SimpleSAO(n, ccrn=self.ccrn, ccrn_multiplier=self.ccrn_multiplier,
                             exploration_floor_multiplier=self.exploration_floor_multiplier,
                             delta=self.delta)
        if self.policy == "ucb1":
            return UCB1(k, n)
        if self.policy == "exp3":
            return Exp3(k, n)
        return Exp3P(k, n, self.delta)

    def to_dict(self) -> dict:
        return asdict(self)


def make_policy(spec: PolicySpec, k: int, n: int) -> Policy:
    return spec.build(k, n)


__all__ = [
    "ADVERSARIAL", "BETA_MODES", "EXPLOITATION", "EXPLORATION", "PHASES", "POLICY_NAMES",
    "Exp3", "Exp3P", "Policy", "PolicySpec", "SAO", "SimpleSAO", "UCB1",
    "consistency_radical", "consistency_threshold", "deactivation_radical", "exp3p_envelope",
    "make_policy", "resolve_beta",
]
