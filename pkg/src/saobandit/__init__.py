"""Bandit simulation toolkit built around SAO, a policy that is near-optimal
against both stochastic and adversarial rewards."""

__version__ = "0.1.0"
SCHEMA_VERSION = "1"

from .config import ExperimentConfig, config_from_dict, load_config  # noqa: E402
from .core import (  # noqa: E402
    ArmStatistics,
    RegretLedger,
    RoundRecord,
    adversarial_regret,
    estimated_average,
    pseudo_regret,
    realized_average,
    record_round,
)
from .harness import run_episode, run_monte_carlo, theorem_envelope  # noqa: E402
from .policies import SAO, UCB1, Exp3, Exp3P, PolicySpec, SimpleSAO  # noqa: E402

__all__ = [
    "ArmStatistics", "Exp3", "Exp3P", "ExperimentConfig", "PolicySpec", "RegretLedger",
    "RoundRecord", "SAO", "SimpleSAO", "UCB1", "adversarial_regret", "config_from_dict",
    "estimated_average", "load_config", "pseudo_regret", "realized_average", "record_round",
    "run_episode", "run_monte_carlo", "theorem_envelope",
]
