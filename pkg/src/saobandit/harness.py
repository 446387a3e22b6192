"""Seeded episodes, Monte Carlo replication and theorem envelopes.

Replicate ``r`` of policy ``j`` reads rewards from ``stream(seed, r, ENV_STREAM)``
and draws arms from ``stream(seed, r, POLICY_STREAM + j)``. Every policy in a
comparison therefore faces the same reward realizations on stochastic and
oblivious environments. Episodes are pure functions of (config, replicate,
policy index), so aggregates do not depend on scheduling or parallelism.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator

from .config import ExperimentConfig
from .core import NO_TEST, RegretLedger, RoundRecord, adversarial_regret
from .environments import History
from .errors import BanditError, EpisodeError, OutOfDomainError
from .policies import SAO, Policy, exp3p_envelope
from .rng import ENV_STREAM, POLICY_STREAM, UniformStream, stream

ENVELOPE_KINDS = ("stoch-highprob", "adv-highprob")

RoundHook = Callable[[int, Policy, list, int, list], None]


def theorem_envelope(kind: str, n: int, k: int, gap: float | None, beta: float) -> float:
    """High-probability regret ceilings for SAO.

    stoch-highprob: 260 K (1 + ln K) ln^2(beta) / gap.
    adv-highprob:   60 (1 + ln K)(1 + ln n) sqrt(n K ln beta + 5 K^2 ln^2 beta) + 200 K^2 ln^2 beta.
    """
    if not beta > 1.0:
        raise OutOfDomainError("beta must exceed 1")
    L = math.log(beta)
    if kind == "stoch-highprob":
        if gap is None or not gap > 0.0:
            raise OutOfDomainError("the stochastic envelope needs a positive gap")
        return 260.0 * k * (1.0 + math.log(k)) * L * L / gap
    if kind == "adv-highprob":
        return (60.0 * (1.0 + math.log(k)) * (1.0 + math.log(n))
                * math.sqrt(n * k * L + 5.0 * k * k * L * L) + 200.0 * k * k * L * L)
    raise OutOfDomainError(f"unknown envelope kind {kind!r}")


@dataclass
class EpisodeResult:
    """One episode. Unpacks as ``trace, ledger, policy``."""

    replicate: int
    policy_index: int
    trace: list[RoundRecord] | None
    ledger: RegretLedger
    policy: Policy
    checkpoints: tuple[int, ...]
    adversarial: list[float]
    pseudo: list[float] | None
    first_fired: dict[str, int]

    def __iter__(self) -> Iterator:
        return iter((self.trace, self.ledger, self.policy))

    def summary(self) -> "EpisodeSummary":
        pol = self.policy
        switched = bool(getattr(pol, "switched", False))
        tau = None
        if isinstance(pol, SAO):
            tau = [None if pol.active[i] else pol.tau[i] for i in range(pol.k)]
        return EpisodeSummary(
            replicate=self.replicate,
            adversarial=self.adversarial,
            pseudo=self.pseudo,
            switched=switched,
            tau0=getattr(pol, "tau0", pol.horizon),
            switch_test=getattr(pol, "switch_test", NO_TEST),
            tau=tau,
            tau_star=getattr(pol, "tau_star", None),
            first_fired=dict(self.first_fired),
        )


@dataclass
class EpisodeSummary:
    """Picklable per-replicate numbers that aggregation needs."""

    replicate: int
    adversarial: list[float]
    pseudo: list[float] | None
    switched: bool
    tau0: int
    switch_test: str
    tau: list[int | None] | None  # deactivation round per arm, None while active
    tau_star: int | None
    first_fired: dict[str, int]


def run_episode(config: ExperimentConfig, replicate: int, policy_index: int = 0, *,
                record_trace: bool = True, on_round: RoundHook | None = None) -> EpisodeResult:
    n, k = config.horizon, config.k
    env = config.build_environment()
    policy = config.policies[policy_index].build(k, n)
    sampler = env.start(stream(config.seed, replicate, ENV_STREAM))
    urng = UniformStream(stream(config.seed, replicate, POLICY_STREAM + policy_index))
    ledger = RegretLedger(k, env.mu)
    history = History() if env.needs_history else None
    trace: list[RoundRecord] | None = [] if record_trace else None
    cps = config.checkpoints
    adv: list[float] = []
    pseudo: list[float] | None = [] if env.mu is not None else None
    fired: dict[str, int] = {}
    ci = 0
    next_cp = cps[0]
    t = 0
    draw, select, observe, add = sampler.draw, policy.select, policy.observe, ledger.add_round
    try:
        for t in range(1, n + 1):
            g = draw(t, history)
            p, arm = select(t, urng)
            reward = g[arm]
            observe(t, arm, reward)
            add(g, arm)
            event = policy.last_event
            if event != NO_TEST and event not in fired:
                fired[event] = t
            if trace is not None:
                trace.append(RoundRecord(t, tuple(p), arm, reward, policy.phase, event))
            if history is not None:
                history.append(arm, g)
            if on_round is not None:
                on_round(t, policy, p, arm, g)
            if t == next_cp:
                adv.append(adversarial_regret(ledger))
                if pseudo is not None:
                    pseudo.append(ledger.gap_sum)
                ci += 1
                next_cp = cps[ci] if ci < len(cps) else 0
    except EpisodeError:
        raise
    except (BanditError, ValueError, IndexError, ZeroDivisionError) as exc:
        raise EpisodeError(f"{type(exc).__name__}: {exc}", t, replicate) from exc
    return EpisodeResult(replicate, policy_index, trace, ledger, policy, cps, adv, pseudo, fired)


def _summary_job(args) -> EpisodeSummary:
    config, replicate, j = args
    return run_episode(config, replicate, j, record_trace=False).summary()


def _quantile(xs: list[float], q: float) -> float:
    """Linear-interpolation quantile of a sorted list."""
    if len(xs) == 1:
        return xs[0]
    h = (len(xs) - 1) * q
    lo = math.floor(h)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo])


@dataclass
class CheckpointStats:
    checkpoint: int
    mean: float
    median: float
    p90: float
    pseudo_mean: float | None
    pseudo_median: float | None
    pseudo_p90: float | None
    exp3p_start_freq: float
    envelope: float | None
    capped_envelope: float | None
    vacuous: bool
    violations: int


@dataclass
class AggregateStats:
    """Cross-replicate summary for one policy.

    The headline regret (``mean``/``median``/``p90``) is the pseudo-regret on
    stochastic environments and the adversarial regret otherwise; both are
    kept when available.
    """

    label: str
    policy: str
    replicates: int
    headline: str
    rows: list[CheckpointStats]
    exp3p_start_freq: float
    tau0: list[int]
    switch_tests: dict[str, int]
    fired_tests: dict[str, int]
    deactivation_times: list[list[int]] | None
    tau_star: list[int] | None
    envelope_kind: str | None
    summaries: list[EpisodeSummary] = field(repr=False, default_factory=list)

    @property
    def final(self) -> CheckpointStats:
        return self.rows[-1]


def envelope_for(config: ExperimentConfig, policy_index: int,
                 checkpoint: int) -> tuple[str | None, float | None, float | None]:
    """(kind, envelope, trivial ceiling) for a policy at a checkpoint.

    The trivial ceiling is gap * t on stochastic runs and t otherwise; an
    envelope at or above it says nothing.
    """
    spec = config.policies[policy_index]
    env = config.build_environment()
    k = config.k
    gap = getattr(env, "gap", None) if env.mu is not None else None
    trivial = gap * checkpoint if gap else float(checkpoint)
    if spec.policy == "sao":
        beta = spec.resolved_beta(config.horizon, k)
        if gap:
            return "stoch-highprob", theorem_envelope("stoch-highprob", checkpoint, k, gap, beta), trivial
        return "adv-highprob", theorem_envelope("adv-highprob", checkpoint, k, None, beta), trivial
    if spec.policy == "exp3p":
        return "exp3p", exp3p_envelope(checkpoint, k, spec.delta), trivial
    return None, None, None


def aggregate(config: ExperimentConfig, policy_index: int, summaries: list[EpisodeSummary]) -> AggregateStats:
    summaries = sorted(summaries, key=lambda s: s.replicate)
    spec = config.policies[policy_index]
    R = len(summaries)
    stochastic = summaries[0].pseudo is not None
    rows = []
    kind = None
    for c_i, cp in enumerate(config.checkpoints):
        adv = sorted(s.adversarial[c_i] for s in summaries)
        ps = sorted(s.pseudo[c_i] for s in summaries) if stochastic else None
        head = ps if stochastic else adv
        kind, env, trivial = envelope_for(config, policy_index, cp)
        cap = min(env, trivial) if env is not None else None
        viol = sum(1 for x in head if x > env) if env is not None else 0
        rows.append(CheckpointStats(
            checkpoint=cp,
            mean=math.fsum(head) / R,
            median=_quantile(head, 0.5),
            p90=_quantile(head, 0.9),
            pseudo_mean=math.fsum(ps) / R if ps else None,
            pseudo_median=_quantile(ps, 0.5) if ps else None,
            pseudo_p90=_quantile(ps, 0.9) if ps else None,
            exp3p_start_freq=sum(1 for s in summaries if s.switched and s.tau0 <= cp) / R,
            envelope=env,
            capped_envelope=cap,
            vacuous=env is not None and env >= trivial,
            violations=viol,
        ))
    fired = Counter()
    for s in summaries:
        fired.update(s.first_fired.keys())
    deact = None
    if spec.policy == "sao":
        deact = [[s.tau[i] for s in summaries if s.tau[i] is not None] for i in range(config.k)]
    return AggregateStats(
        label=spec.label,
        policy=spec.policy,
        replicates=R,
        headline="pseudo" if stochastic else "adversarial",
        rows=rows,
        exp3p_start_freq=sum(s.switched for s in summaries) / R,
        tau0=[s.tau0 for s in summaries],
        switch_tests=dict(Counter(s.switch_test for s in summaries)),
        fired_tests=dict(fired),
        deactivation_times=deact,
        tau_star=[s.tau_star for s in summaries if s.tau_star is not None] if spec.policy == "simple-sao" else None,
        envelope_kind=kind,
        summaries=summaries,
    )


def run_monte_carlo(config: ExperimentConfig, policy_index: int | None = None,
                    parallel: int = 1) -> list[AggregateStats]:
    """Aggregate ``config.replicates`` episodes for each policy (or just one)."""
    indices = range(len(config.policies)) if policy_index is None else [policy_index]
    jobs = [(config, r, j) for j in indices for r in range(config.replicates)]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_summary_job, jobs, chunksize=max(1, len(jobs) // (4 * parallel))))
    else:
        results = [_summary_job(job) for job in jobs]
    out = []
    for j in indices:
        mine = [s for (cfg, r, jj), s in zip(jobs, results) if jj == j]
        out.append(aggregate(config, j, mine))
    return out


# -- outputs ------------------------------------------------------------------

AGGREGATE_HEADER = ["checkpoint", "policy", "mean_regret", "median", "p90", "exp3p_start_freq",
                    "envelope", "capped_envelope"]


def _num(x: float | None) -> str:
    return "" if x is None else format(x, ".17g")


def aggregate_csv(stats: list[AggregateStats]) -> str:
    lines = [",".join(AGGREGATE_HEADER)]
    for agg in stats:
        for row in agg.rows:
            lines.append(",".join([
                str(row.checkpoint), agg.label, _num(row.mean), _num(row.median), _num(row.p90),
                _num(row.exp3p_start_freq), _num(row.envelope), _num(row.capped_envelope),
            ]))
    return "\n".join(lines) + "\n"


def summary_dict(agg: AggregateStats) -> dict:
    f = agg.final
    return {
        "label": agg.label,
        "policy": agg.policy,
        "replicates": agg.replicates,
        "headline_regret": agg.headline,
        "final": {
            "checkpoint": f.checkpoint,
            "mean": f.mean,
            "median": f.median,
            "p90": f.p90,
            "pseudo_mean": f.pseudo_mean,
            "envelope_kind": agg.envelope_kind,
            "envelope": f.envelope,
            "capped_envelope": f.capped_envelope,
            "envelope_vacuous": f.vacuous,
            "envelope_violations": f.violations,
        },
        "exp3p_start_freq": agg.exp3p_start_freq,
        "tau0": agg.tau0,
        "switch_tests": agg.switch_tests,
        "fired_tests": agg.fired_tests,
        "deactivation_times": agg.deactivation_times,
        "tau_star": agg.tau_star,
    }


def envelope_violations(stats: list[AggregateStats]) -> int:
    return sum(row.violations for agg in stats for row in agg.rows)


def manifest(config: ExperimentConfig, command: str, outputs: list[str]) -> dict:
    from . import __version__
    from .config import config_hash, normalize

    return {
        "version": __version__,
        "command": command,
        "config_hash": config_hash(config),
        "seeds": {
            "master": config.seed,
            "replicates": config.replicates,
            "environment_stream": ENV_STREAM,
            "policy_streams": [POLICY_STREAM + j for j in range(len(config.policies))],
            "rule": "default_rng(SeedSequence(master, spawn_key=(replicate, stream)))",
        },
        "config": normalize(config),
        "outputs": outputs,
    }
