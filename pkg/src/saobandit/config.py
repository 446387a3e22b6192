"""Experiment configuration: YAML in, validated frozen objects out.

Schema (every key except ``environment`` and ``policies`` is optional)::

    name: flip-demo
    horizon: 50000            # n
    replicates: 100           # R
    seed: 7                   # master seed
    mode: experiment          # faithful | experiment
    checkpoints: [1000, 50000]
    environment:
      kind: probe             # bernoulli | discrete | oblivious-constant |
                              # oblivious-bernoulli | oblivious-matrix | probe
      probe: stochastic-then-flip
      means: [0.8, 0.2]
    policies:
      - policy: sao           # sao | simple-sao | ucb1 | exp3 | exp3p
        beta_mode: n4

``mode`` only supplies defaults for policy keys left unset. :func:`normalize`
turns a config into a plain dict with every default written out, and loading
that dict again gives an equal config.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .environments import (
    PROBE_KINDS,
    BernoulliSequenceAdversary,
    ConstantAdversary,
    Environment,
    MatrixAdversary,
    StochasticEnvironment,
    make_probe_adversary,
)
from .errors import ConfigError
from .policies import BETA_MODES, POLICY_NAMES, PolicySpec

MODES = ("faithful", "experiment")
ENV_KINDS = ("bernoulli", "discrete", "oblivious-constant", "oblivious-bernoulli",
             "oblivious-matrix", "probe")

# Constants the proofs need versus constants that do something at n <= 1e5.
MODE_DEFAULTS = {
    "faithful": {
        "sao": {"beta_mode": "n4", "threshold_scale": 1.0},
        "simple-sao": {"ccrn": None, "ccrn_multiplier": 12.0},
    },
    "experiment": {
        "sao": {"beta_mode": "n", "threshold_scale": 0.15},
        "simple-sao": {"ccrn": 1.0, "ccrn_multiplier": 12.0},
    },
}

_TOP_KEYS = {"name", "horizon", "replicates", "seed", "mode", "checkpoints", "environment", "policies"}
_POLICY_KEYS = {"policy", "label", "beta_mode", "beta", "delta", "threshold_scale", "snapshot",
                "ccrn", "ccrn_multiplier", "exploration_floor_multiplier"}
_ENV_KEYS = {
    "bernoulli": {"means"},
    "discrete": {"values", "probs"},
    "oblivious-constant": {"rewards"},
    "oblivious-bernoulli": {"means", "seed"},
    "oblivious-matrix": {"rewards"},
    "probe": {"probe", "means", "at", "flipped", "amount", "gap", "low", "high", "leader", "k"},
}


def default_checkpoints(n: int) -> tuple[int, ...]:
    """ceil(n / 2^j) for j = 0, 1, ... down to 1."""
    pts = set()
    d = 1
    while True:
        c = -(-n // d)
        pts.add(c)
        if c == 1:
            break
        d *= 2
    return tuple(sorted(pts))


@dataclass(frozen=True)
class EnvironmentSpec:
    kind: str
    params: tuple = ()

    @property
    def options(self) -> dict:
        return {k: _thaw(v) for k, v in self.params}

    def build(self, horizon: int) -> Environment:
        o = self.options
        if self.kind == "bernoulli":
            return StochasticEnvironment.bernoulli(o["means"])
        if self.kind == "discrete":
            return StochasticEnvironment(o["values"], o["probs"])
        if self.kind == "oblivious-constant":
            return ConstantAdversary(o["rewards"])
        if self.kind == "oblivious-bernoulli":
            return BernoulliSequenceAdversary(o["means"], o.get("seed"))
        if self.kind == "oblivious-matrix":
            env = MatrixAdversary(o["rewards"])
            if env.horizon < horizon:
                raise ConfigError(f"matrix has {env.horizon} rows, horizon is {horizon}",
                                  "environment.rewards")
            return env
        params = dict(o)
        kind = params.pop("probe")
        params["horizon"] = horizon
        return make_probe_adversary(kind, params)


@dataclass(frozen=True)
class ExperimentConfig:
    environment: EnvironmentSpec
    policies: tuple[PolicySpec, ...]
    horizon: int
    replicates: int = 1
    seed: int = 0
    mode: str = "faithful"
    checkpoints: tuple[int, ...] = ()
    name: str = "experiment"
    k: int = field(default=0, compare=False)

    def __post_init__(self):
        try:
            env = self.build_environment()
        except ConfigError as exc:
            if exc.key is None:
                raise ConfigError(str(exc), "environment") from None
            if not exc.key.startswith("environment"):
                raise ConfigError(str(exc).split(": ", 1)[-1], f"environment.{exc.key}") from None
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc), "environment") from None
        object.__setattr__(self, "k", env.k)
        n, k = self.horizon, env.k
        if not n >= k >= 2:
            raise ConfigError(f"need n ≥ K ≥ 2, got n = {n}, K = {k}", "horizon")
        if self.replicates < 1:
            raise ConfigError("need at least one replicate", "replicates")
        if not self.policies:
            raise ConfigError("no policies given", "policies")
        labels = [p.label for p in self.policies]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"policy labels must be distinct, got {labels}", "policies")
        for j, p in enumerate(self.policies):
            if p.policy == "simple-sao" and k != 2:
                raise ConfigError("simple-sao needs exactly two arms", f"policies[{j}].policy")
        cps = self.checkpoints or default_checkpoints(n)
        cps = tuple(sorted(set(int(c) for c in cps)))
        if cps[0] < 1 or cps[-1] > n:
            raise ConfigError(f"checkpoints must lie in [1, {n}]", "checkpoints")
        if cps[-1] != n:
            cps = cps + (n,)
        object.__setattr__(self, "checkpoints", cps)

    def build_environment(self) -> Environment:
        return self.environment.build(self.horizon)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return _replace(self, seed=int(seed))

    def with_replicates(self, replicates: int) -> "ExperimentConfig":
        return _replace(self, replicates=int(replicates))


def _replace(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    from dataclasses import replace

    return replace(cfg, **changes)


# -- parsing ------------------------------------------------------------------


def _freeze(v):
    if isinstance(v, list):
        return tuple(_freeze(x) for x in v)
    return v


def _thaw(v):
    if isinstance(v, tuple):
        return [_thaw(x) for x in v]
    return v


def _unknown(d: dict, allowed: set, where: str) -> None:
    extra = sorted(set(d) - allowed)
    if extra:
        prefix = f"{where}." if where else ""
        raise ConfigError(f"unknown key (allowed: {', '.join(sorted(allowed))})", prefix + extra[0])


def _as_int(v: Any, key: str) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (isinstance(v, float) and not v.is_integer()):
        raise ConfigError(f"expected an integer, got {v!r}", key)
    return int(v)


def _as_float(v: Any, key: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"expected a finite number, got {v!r}", key)
    return float(v)


def _float_list(v: Any, key: str) -> list[float]:
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError("expected a non-empty list of numbers", key)
    return [_as_float(x, f"{key}[{i}]") for i, x in enumerate(v)]


def _parse_environment(raw: Any) -> EnvironmentSpec:
    if not isinstance(raw, dict):
        raise ConfigError("expected a mapping", "environment")
    kind = raw.get("kind")
    if kind not in ENV_KINDS:
        raise ConfigError(f"kind must be one of {', '.join(ENV_KINDS)}, got {kind!r}", "environment.kind")
    body = {k: v for k, v in raw.items() if k != "kind"}
    _unknown(body, _ENV_KEYS[kind], "environment")
    out: dict[str, Any] = {}
    for key, v in body.items():
        path = f"environment.{key}"
        if key in ("means", "flipped") or (key == "rewards" and kind == "oblivious-constant"):
            out[key] = _float_list(v, path)
        elif key in ("values", "probs") or (key == "rewards" and kind == "oblivious-matrix"):
            if not isinstance(v, (list, tuple)) or not v:
                raise ConfigError("expected a list of lists", path)
            out[key] = [_float_list(row, f"{path}[{i}]") for i, row in enumerate(v)]
        elif key in ("seed", "leader", "k"):
            out[key] = _as_int(v, path)
        elif key == "probe":
            if v not in PROBE_KINDS:
                raise ConfigError(f"must be one of {', '.join(PROBE_KINDS)}, got {v!r}", path)
            out[key] = v
        else:
            out[key] = _as_float(v, path)
    required = {"bernoulli": ["means"], "discrete": ["values", "probs"],
                "oblivious-constant": ["rewards"], "oblivious-bernoulli": ["means"],
                "oblivious-matrix": ["rewards"], "probe": ["probe"]}[kind]
    for key in required:
        if key not in out:
            raise ConfigError("missing required key", f"environment.{key}")
    return EnvironmentSpec(kind, tuple(sorted((k, _freeze(v)) for k, v in out.items())))


def _parse_policy(raw: Any, mode: str, j: int) -> PolicySpec:
    where = f"policies[{j}]"
    if isinstance(raw, str):
        raw = {"policy": raw}
    if not isinstance(raw, dict):
        raise ConfigError("expected a mapping or a policy name", where)
    _unknown(raw, _POLICY_KEYS, where)
    name = raw.get("policy")
    if name not in POLICY_NAMES:
        raise ConfigError(f"must be one of {', '.join(POLICY_NAMES)}, got {name!r}", f"{where}.policy")
    values: dict[str, Any] = dict(MODE_DEFAULTS[mode].get(name, {}))
    for key, v in raw.items():
        path = f"{where}.{key}"
        if key in ("policy", "label"):
            if not isinstance(v, str):
                raise ConfigError("expected a string", path)
            values[key] = v
        elif key == "beta_mode":
            if v not in BETA_MODES:
                raise ConfigError(f"must be one of {', '.join(BETA_MODES)}, got {v!r}", path)
            values[key] = v
        elif key == "snapshot":
            if not isinstance(v, bool):
                raise ConfigError("expected true or false", path)
            values[key] = v
        elif key in ("beta", "ccrn") and v is None:
            values[key] = None
        else:
            values[key] = _as_float(v, path)
    if "delta" in values and not 0.0 < values["delta"] < 1.0:
        raise ConfigError("delta must lie in (0, 1)", f"{where}.delta")
    if values.get("beta_mode") == "custom" and values.get("beta") is None:
        raise ConfigError("beta_mode custom needs beta", f"{where}.beta")
    if values.get("beta") is not None and not values["beta"] > 1.0:
        raise ConfigError("beta must exceed 1", f"{where}.beta")
    for key in ("threshold_scale", "ccrn_multiplier", "exploration_floor_multiplier"):
        if key in values and not values[key] > 0.0:
            raise ConfigError("must be positive", f"{where}.{key}")
    if values.get("ccrn") is not None and not values["ccrn"] > 0.0:
        raise ConfigError("must be positive", f"{where}.ccrn")
    return PolicySpec(**values)


def config_from_dict(raw: Any) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping")
    _unknown(raw, _TOP_KEYS, "")
    mode = raw.get("mode", "faithful")
    if mode not in MODES:
        raise ConfigError(f"must be one of {', '.join(MODES)}, got {mode!r}", "mode")
    for key in ("environment", "policies", "horizon"):
        if key not in raw:
            raise ConfigError("missing required key", key)
    horizon = _as_int(raw["horizon"], "horizon")
    if horizon < 2:
        raise ConfigError(f"need n ≥ K ≥ 2, got n = {horizon}", "horizon")
    pols = raw["policies"]
    if not isinstance(pols, list):
        raise ConfigError("expected a list", "policies")
    cps = raw.get("checkpoints") or ()
    if not isinstance(cps, (list, tuple)):
        raise ConfigError("expected a list of round indices", "checkpoints")
    name = raw.get("name", "experiment")
    if not isinstance(name, str):
        raise ConfigError("expected a string", "name")
    return ExperimentConfig(
        environment=_parse_environment(raw["environment"]),
        policies=tuple(_parse_policy(p, mode, j) for j, p in enumerate(pols)),
        horizon=horizon,
        replicates=_as_int(raw.get("replicates", 1), "replicates"),
        seed=_as_int(raw.get("seed", 0), "seed"),
        mode=mode,
        checkpoints=tuple(_as_int(c, f"checkpoints[{i}]") for i, c in enumerate(cps)),
        name=name,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}", str(path)) from None
    return config_from_dict(raw)


def normalize(cfg: ExperimentConfig) -> dict:
    """Plain-data form with every default spelled out."""
    env = {"kind": cfg.environment.kind, **cfg.environment.options}
    return {
        "name": cfg.name,
        "horizon": cfg.horizon,
        "replicates": cfg.replicates,
        "seed": cfg.seed,
        "mode": cfg.mode,
        "checkpoints": list(cfg.checkpoints),
        "environment": env,
        "policies": [p.to_dict() for p in cfg.policies],
    }


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(normalize(cfg), sort_keys=False)


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(normalize(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
