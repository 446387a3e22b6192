"""Exception hierarchy shared by every module."""

from __future__ import annotations


class BanditError(Exception):
    """Base class for all errors raised by saobandit."""


class InvalidProbabilityError(BanditError, ValueError):
    """A selection probability was zero, negative, or otherwise unusable."""


class InvalidRewardError(BanditError, ValueError):
    """A reward fell outside [0, 1]."""


class UndefinedAverageError(BanditError, ZeroDivisionError):
    """An average was requested before any sample existed."""


class ModelMismatchError(BanditError):
    """A stochastic-only quantity was requested on a non-stochastic run."""


class HorizonExceededError(BanditError):
    """A policy was stepped past its known horizon."""


class OutOfDomainError(BanditError, ValueError):
    """A bound or envelope was evaluated outside its domain."""


class HypothesisViolationError(BanditError):
    """A sampler produced values violating the hypotheses of a bound."""


class ConfigError(BanditError):
    """Invalid experiment configuration.

    ``key`` is the dotted path of the offending entry when known.
    """

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class EpisodeError(BanditError):
    """A contract violation inside an episode, tagged with where it happened."""

    def __init__(self, message: str, round_index: int, replicate: int | None = None):
        self.round_index = round_index
        self.replicate = replicate
        where = f"round {round_index}"
        if replicate is not None:
            where = f"replicate {replicate}, {where}"
        super().__init__(f"{where}: {message}")
