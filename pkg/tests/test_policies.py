import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from saobandit.config import config_from_dict
from saobandit.core import (
    CONSISTENCY_DRIFT_DOWN,
    CONSISTENCY_DRIFT_UP,
    CONSISTENCY_ESTIMATES,
    DEACTIVATE,
    NO_TEST,
)
from saobandit.errors import HorizonExceededError
from saobandit.harness import run_episode
from saobandit.policies import (
    SAO,
    UCB1,
    Exp3,
    Exp3P,
    PolicySpec,
    SimpleSAO,
    consistency_radical,
    deactivation_radical,
    exp3p_envelope,
    resolve_beta,
)
from saobandit.rng import UniformStream

from invariants import InvariantChecker


def play(policy, rewards, n, seed=0):
    """Drive a policy against a fixed reward vector; returns the chosen arms."""
    rng = UniformStream(seed)
    arms = []
    for t in range(1, n + 1):
        p, arm = policy.select(t, rng)
        policy.observe(t, arm, rewards[arm])
        arms.append(arm)
    return arms


# -- thresholds ---------------------------------------------------------------

def test_deactivation_threshold_example():
    n = 10**5
    L = math.log(resolve_beta("n4", n, 2))
    assert L == pytest.approx(46.0517, abs=1e-4)
    assert 6 * deactivation_radical(2, L, 10**4) == pytest.approx(1.158, abs=5e-4)


@given(st.integers(2, 50), st.floats(1.0001, 1e30), st.integers(1, 10**7), st.integers(0, 10**6),
       st.floats(0.01, 1.0))
def test_consistency_radical_reduces_while_active(k, beta, t, extra, q):
    L = math.log(beta)
    tau = t + extra  # still active: tau >= t
    assert consistency_radical(k, L, t, tau, q) == pytest.approx(deactivation_radical(k, L, t), rel=1e-12)


def test_consistency_radical_after_deactivation_is_larger():
    k, L = 3, math.log(1e6)
    base = deactivation_radical(k, L, 200)
    assert consistency_radical(k, L, 400, 200, 0.4) > deactivation_radical(k, L, 400)
    assert consistency_radical(k, L, 200, 200, 0.4) == pytest.approx(base, rel=1e-12)


def test_resolve_beta():
    assert resolve_beta("high-prob", 5 * 10**4, 2, 0.05) == pytest.approx(5e16)
    assert resolve_beta("n", 100, 2) == 100.0
    assert resolve_beta("custom", 100, 2, beta=7.0) == 7.0
    with pytest.raises(ValueError):
        resolve_beta("custom", 100, 2)
    with pytest.raises(ValueError):
        resolve_beta("bogus", 100, 2)


# -- SAO mechanics --------------------------------------------------------------

def test_probability_update_instance():
    pol = SAO(3, 100, beta=100.0)
    pol.active[2] = False
    pol.n_active = 2
    pol.tau[2] = 10
    pol.q[2] = 1.0 / 3.0
    pol._update(19)
    assert pol.p[2] == pytest.approx(1.0 / 6.0)
    assert pol.p[0] == pol.p[1] == pytest.approx(5.0 / 12.0)
    assert math.fsum(pol.p) == pytest.approx(1.0)


def _primed(k=2, t=100, beta=1e4, estimated=None, realized=None, plays=None, scale=1.0):
    pol = SAO(k, 10**4, beta=beta, threshold_scale=scale)
    st_ = pol.stats
    st_.t = t
    st_.plays = list(plays or [t // k] * k)
    st_.realized = list(realized or [0.0] * k)
    st_.estimated = list(estimated or [0.0] * k)
    return pol


def test_deactivation_fires_and_freezes():
    # gap 0.8 sits between the deactivation line (0.57) and the drift-up line (0.96)
    pol = _primed(estimated=[80.0, 0.0], realized=[40.0, 0.0], plays=[50, 50], scale=0.1)
    assert pol._tests(100) == DEACTIVATE
    assert pol.active == [True, False] and pol.tau[1] == 100 and pol.q[1] == 0.5
    assert not pol.switched


def test_estimate_consistency_fires_first():
    # arm 0's per-play average (0) disagrees with its estimate (1)
    pol = _primed(t=8000, estimated=[8000.0, 8000.0], realized=[0.0, 4000.0], plays=[4000, 4000],
                  scale=0.1)
    assert pol._tests(8000) == CONSISTENCY_ESTIMATES
    assert pol.switched and pol.tau0 == 8000 and pol.phase == "exp3p"
    assert pol.exp3p.horizon == 10**4 - 8000


def test_estimate_consistency_skipped_before_first_play():
    pol = _primed(estimated=[50.0, 50.0], realized=[25.0, 0.0], plays=[100, 0], scale=0.1)
    assert pol._tests(100) == NO_TEST


def _deactivated_arm(gap_now, scale=0.1):
    """Arm 1 deactivated at round 100; at round 200 its estimate trails by gap_now."""
    pol = _primed(estimated=[80.0, 0.0], realized=[40.0, 0.0], plays=[50, 50], scale=scale)
    assert pol._tests(100) == DEACTIVATE
    pol._update(100)
    st_ = pol.stats
    st_.t = 200
    st_.plays = [150, 50]
    st_.estimated = [200.0 * 0.75, 200.0 * (0.75 - gap_now)]
    st_.realized = [0.75 * 150, (0.75 - gap_now) * 50]
    return pol


def test_drift_up_fires():
    L = math.log(1e4)
    up = 10 * 0.1 * deactivation_radical(2, L, 99)
    pol = _deactivated_arm(up + 0.01)
    assert pol._tests(200) == CONSISTENCY_DRIFT_UP


def test_drift_down_fires():
    L = math.log(1e4)
    down = 2 * 0.1 * deactivation_radical(2, L, 100)
    pol = _deactivated_arm(down - 0.01)
    assert pol._tests(200) == CONSISTENCY_DRIFT_DOWN


def test_no_drift_in_between():
    L = math.log(1e4)
    lo = 2 * 0.1 * deactivation_radical(2, L, 100)
    hi = 10 * 0.1 * deactivation_radical(2, L, 99)
    pol = _deactivated_arm((lo + hi) / 2)
    assert pol._tests(200) == NO_TEST


def test_live_versus_snapshot_active_set():
    # arm 1 deactivates this round with a gap above the drift-up line of the previous round
    est = [100.0, 0.0]
    live = _primed(estimated=est, realized=[50.0, 0.0], plays=[50, 50], scale=0.05)
    snap = _primed(estimated=est, realized=[50.0, 0.0], plays=[50, 50], scale=0.05)
    snap.snapshot = True
    assert live._tests(100) == CONSISTENCY_DRIFT_UP
    assert snap._tests(100) == DEACTIVATE and not snap.switched


def test_sao_horizon_exceeded():
    pol = SAO(2, 5, beta=10.0)
    play(pol, [1.0, 0.0], 5)
    with pytest.raises(HorizonExceededError):
        pol.select(6, UniformStream(0))


def test_sao_rejects_bad_beta():
    with pytest.raises(ValueError):
        SAO(2, 10, beta=1.0)


def test_sao_exp3p_handover_covers_remaining_rounds():
    pol = SAO(2, 50, beta=10.0)
    pol._switch(20, CONSISTENCY_DRIFT_DOWN)
    rng = UniformStream(1)
    for t in range(21, 51):
        p, arm = pol.select(t, rng)
        pol.observe(t, arm, 0.5)
    assert pol.exp3p.stats.t == 30 and pol.stats.t == 30


# -- SimpleSAO ----------------------------------------------------------------

def test_simple_sao_faithful_constants():
    pol = SimpleSAO(10**4)
    assert pol.ccrn == pytest.approx(110.52, abs=5e-3)
    assert 24 * pol.ccrn / math.sqrt(10**4) == pytest.approx(26.53, abs=5e-3)
    # the threshold exceeds any possible estimate gap (at most 2 here), so exploration never ends
    arms = play(pol, [1.0, 0.0], 10**4)
    assert pol.phase == "exploration" and pol.tau_star is None
    assert 0 in arms and 1 in arms


def test_simple_sao_schedule_value():
    pol = SimpleSAO(1000, ccrn=1.0)
    pol._phase, pol.tau_star, pol.leader = "exploitation", 100, 0
    p, _ = pol.select(200, UniformStream(0))
    assert p == [0.75, 0.25]


def test_simple_sao_exits_exploration_small_constant():
    # gap 0.8 makes 24 / sqrt(t) <= gap possible from t = 900 on
    cfg = config_from_dict({"horizon": 10**4, "replicates": 100, "seed": 0,
                            "environment": {"kind": "bernoulli", "means": [0.9, 0.1]},
                            "policies": [{"policy": "simple-sao", "ccrn": 1.0}]})
    taus, leaders = [], 0
    for r in range(100):
        pol = run_episode(cfg, r, record_trace=False).policy
        taus.append(pol.tau_star)
        leaders += pol.leader == 0
    assert all(t is not None for t in taus)
    assert 800 <= float(np.median(taus)) <= 1000
    assert leaders >= 99


def test_simple_sao_needs_two_arms():
    with pytest.raises(ValueError):
        PolicySpec("simple-sao").build(3, 100)


def test_simple_sao_horizon():
    pol = SimpleSAO(3, ccrn=1.0)
    play(pol, [0.5, 0.5], 3)
    with pytest.raises(HorizonExceededError):
        pol.select(4, UniformStream(0))


# -- baselines ----------------------------------------------------------------

def test_ucb1_initial_rounds():
    pol = UCB1(4, 100)
    assert play(pol, [0.1, 0.2, 0.3, 0.4], 4) == [0, 1, 2, 3]


def test_ucb1_prefers_best_arm():
    pol = UCB1(3, 2000)
    arms = play(pol, [0.2, 0.9, 0.5], 2000)
    assert arms.count(1) > 1800


def test_exp3_uniform_with_equal_estimates():
    pol = Exp3(3, 100)
    rng = UniformStream(0)
    play(pol, [0.0, 0.0, 0.0], 20)
    assert pol.p[0] == pol.p[1] == pol.p[2] == pytest.approx(1.0 / 3, rel=1e-15)
    pol = Exp3(3, 100)
    pol.log_weights = [2.5, 2.5, 2.5]
    p, _ = pol.select(1, rng)
    assert p[0] == p[1] == p[2]


def test_exp3p_parameters():
    pol = Exp3P(2, 10**4, 0.01)
    assert pol.gamma == pytest.approx(1.05 * math.sqrt(2 * math.log(2) / 10**4))
    assert pol.bias == pytest.approx(math.sqrt(math.log(200) / (2 * 10**4)))
    assert exp3p_envelope(10**4, 2, 0.01) == pytest.approx(1677, abs=1.0)


def test_exp3p_probability_floor():
    pol = Exp3P(3, 5000, 0.05)
    rng = UniformStream(2)
    for t in range(1, 5001):
        p, arm = pol.select(t, rng)
        assert min(p) >= pol.gamma / 3 - 1e-15
        assert all(math.isfinite(w) for w in pol.log_weights)
        pol.observe(t, arm, [1.0, 0.0, 0.3][arm])


def test_exp3p_envelope_without_slack():
    cfg = config_from_dict({"horizon": 10**4, "replicates": 100, "seed": 21,
                            "environment": {"kind": "oblivious-constant", "rewards": [1.0, 0.0]},
                            "policies": [{"policy": "exp3p", "delta": 0.01}]})
    env = exp3p_envelope(10**4, 2, 0.01)
    ok = sum(run_episode(cfg, r, record_trace=False).adversarial[-1] <= env for r in range(100))
    assert ok >= 99


@pytest.mark.parametrize("cls,args", [(UCB1, (2, 3)), (Exp3, (2, 3)), (Exp3P, (2, 3))])
def test_baselines_horizon(cls, args):
    pol = cls(*args)
    play(pol, [0.5, 0.5], 3)
    with pytest.raises(HorizonExceededError):
        pol.select(4, UniformStream(0))


# -- randomized invariant sweep -------------------------------------------------

policy_specs = st.sampled_from([
    {"policy": "sao"},
    {"policy": "sao", "snapshot": True},
    {"policy": "sao", "beta_mode": "n4", "threshold_scale": 1.0},
    {"policy": "sao", "threshold_scale": 0.05},
    {"policy": "simple-sao"},
    {"policy": "ucb1"},
    {"policy": "exp3"},
    {"policy": "exp3p"},
])


@given(st.integers(2, 6), policy_specs, st.integers(0, 2**31), st.data())
def test_invariants_randomized(k, spec, seed, data):
    if spec["policy"] == "simple-sao":
        k = 2
    means = data.draw(st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k))
    env = data.draw(st.sampled_from([
        {"kind": "bernoulli", "means": means},
        {"kind": "probe", "probe": "stochastic-then-flip", "means": means},
        {"kind": "probe", "probe": "gap-collapser", "means": means},
        {"kind": "oblivious-bernoulli", "means": means},
    ]))
    n = 400
    cfg = config_from_dict({"horizon": n, "seed": seed, "mode": "experiment",
                            "environment": env, "policies": [spec]})
    checker = InvariantChecker(k, n)
    res = run_episode(cfg, 0, on_round=checker)
    assert checker.rounds == n and len(res.trace) == n
    for rec in res.trace:
        rec.check()
