"""``saobandit`` command line.

Exit codes: 0 success, 1 other failure, 2 configuration error, 3 envelope or
bound violation under ``--strict``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import SCHEMA_VERSION, __version__
from .concentration import validate_all
from .config import ExperimentConfig, load_config
from .core import read_trace, replay_statistics, trace_to_csv
from .errors import BanditError, ConfigError
from .harness import (
    aggregate_csv,
    envelope_violations,
    manifest,
    run_episode,
    run_monte_carlo,
    summary_dict,
)
from .outputs import atomic_write_text

OUT_ENV = "SAOBANDIT_OUT"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_STRICT = 0, 1, 2, 3
BOUNDS_HEADER = "bound,params,theoretical_failure_prob,empirical_rate,trials"


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./saobandit-out)")
    common.add_argument("--parallel", type=int, default=1, metavar="N", help="worker processes")
    common.add_argument("--emit-traces", action="store_true", help="write one trace CSV per episode")
    common.add_argument("--strict", action="store_true", help="exit 3 on any envelope or bound violation")

    ap = argparse.ArgumentParser(prog="saobandit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version",
                    version=f"saobandit {__version__} (config schema {SCHEMA_VERSION})")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="Monte Carlo run of every policy in a config")
    p.add_argument("config")
    p = sub.add_parser("compare", parents=[common], help="paired comparison of two or more policies")
    p.add_argument("config")
    p = sub.add_parser("validate-bounds", parents=[common], help="Monte Carlo check of the concentration bounds")
    p.add_argument("--trials", type=int, default=100_000)
    p = sub.add_parser("replay", parents=[common], help="re-run an episode and compare it with a trace")
    p.add_argument("trace")
    p.add_argument("config")
    p.add_argument("--replicate", type=int, default=0)
    p.add_argument("--policy", type=int, default=0, help="policy index in the config")
    return ap


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or "saobandit-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.4g}"


def _report(stats) -> None:
    for agg in stats:
        f = agg.final
        line = (f"{agg.label}: n={f.checkpoint} {agg.headline} regret mean={_fmt(f.mean)} "
                f"median={_fmt(f.median)} p90={_fmt(f.p90)} exp3p_start_freq={agg.exp3p_start_freq:.3f}")
        if f.envelope is not None:
            flag = " (vacuous at this n)" if f.vacuous else ""
            line += (f" envelope[{agg.envelope_kind}]={_fmt(f.envelope)} capped={_fmt(f.capped_envelope)}"
                     f"{flag} violations={f.violations}")
        print(line)


def _simulate(args, command: str) -> int:
    cfg = _load(args)
    if command == "compare" and len(cfg.policies) < 2:
        raise ConfigError("compare needs at least two policies", "policies")
    out = _out_dir(args)
    stats = run_monte_carlo(cfg, parallel=max(1, args.parallel))
    written = ["aggregate.csv", "summary.json"]
    atomic_write_text(out / "aggregate.csv", aggregate_csv(stats))
    summary = {"policies": [summary_dict(a) for a in stats]}
    if command == "compare":
        summary["paired_differences"] = _paired(stats)
    atomic_write_text(out / "summary.json", json.dumps(summary, indent=2) + "\n")
    if args.emit_traces:
        tdir = out / "traces"
        tdir.mkdir(exist_ok=True)
        for j in range(len(cfg.policies)):
            for r in range(cfg.replicates):
                res = run_episode(cfg, r, j)
                name = f"traces/trace_p{j}_r{r}.csv"
                atomic_write_text(out / name, trace_to_csv(res.trace, cfg.k))
                written.append(name)
    atomic_write_text(out / "manifest.json",
                      json.dumps(manifest(cfg, command, written), indent=2) + "\n")
    _report(stats)
    if command == "compare":
        for d in summary["paired_differences"]:
            print(f"{d['label']} - {d['baseline']}: mean difference {d['mean']:.4g} "
                  f"(stderr {d['stderr']:.3g})")
    print(f"wrote {out}")
    if args.strict and envelope_violations(stats):
        print(f"envelope violated in {envelope_violations(stats)} replicate-checkpoints", file=sys.stderr)
        return EXIT_STRICT
    return EXIT_OK


def _paired(stats) -> list[dict]:
    """Final-regret differences against the first policy, replicate by replicate."""
    base = stats[0]

    def final(s, agg):
        return s.pseudo[-1] if agg.headline == "pseudo" else s.adversarial[-1]

    out = []
    for agg in stats[1:]:
        d = np.array([final(a, agg) - final(b, base) for a, b in zip(agg.summaries, base.summaries)])
        se = float(d.std(ddof=1) / np.sqrt(len(d))) if len(d) > 1 else float("nan")
        out.append({"label": agg.label, "baseline": base.label, "mean": float(d.mean()), "stderr": se})
    return out


def _validate(args) -> int:
    if args.trials < 1000:
        raise ConfigError("need at least 1000 trials", "--trials")
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    results = validate_all(args.trials, rng)
    lines = [BOUNDS_HEADER]
    for res in results:
        lines.append(f"{res.name},{res.bound.describe()},{res.failure_probability:.17g},"
                     f"{res.rate:.17g},{res.trials}")
        status = "ok" if res.passed else "VIOLATED"
        print(f"{res.name:22s} {res.sampler:22s} rate={res.rate:.5f} "
              f"bound={res.failure_probability:.5f} {status}")
    out = _out_dir(args)
    atomic_write_text(out / "bounds.csv", "\n".join(lines) + "\n")
    print(f"wrote {out / 'bounds.csv'}")
    if not all(r.passed for r in results):
        return EXIT_STRICT if args.strict else EXIT_FAIL
    return EXIT_OK


def _replay(args) -> int:
    cfg = _load(args)
    if not 0 <= args.policy < len(cfg.policies):
        raise ConfigError(f"policy index {args.policy} out of range", "--policy")
    try:
        records, k = read_trace(args.trace)
    except (OSError, ValueError) as exc:
        print(f"cannot read trace: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if k != cfg.k:
        print(f"trace has K={k}, config has K={cfg.k}", file=sys.stderr)
        return EXIT_FAIL
    res = run_episode(cfg, args.replicate, args.policy)
    expected = trace_to_csv(res.trace, cfg.k)
    actual = Path(args.trace).read_text()
    if expected != actual:
        for i, (a, b) in enumerate(zip(actual.splitlines(), expected.splitlines())):
            if a != b:
                print(f"trace mismatch at line {i + 1}:\n  file:   {a}\n  replay: {b}", file=sys.stderr)
                break
        else:
            print("trace mismatch: different lengths", file=sys.stderr)
        return EXIT_FAIL
    stats = replay_statistics(records, k)
    if stats != res.policy.stats:
        print("statistics recomputed from the trace differ from the episode's", file=sys.stderr)
        return EXIT_FAIL
    print(f"trace verified: {len(records)} rounds, replicate {args.replicate}, "
          f"policy {cfg.policies[args.policy].label}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command in ("run", "compare"):
            return _simulate(args, args.command)
        if args.command == "validate-bounds":
            return _validate(args)
        return _replay(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BanditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
