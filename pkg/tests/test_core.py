import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from saobandit.core import (
    ArmStatistics,
    RegretLedger,
    RoundRecord,
    adversarial_regret,
    estimated_average,
    pseudo_regret,
    read_trace,
    realized_average,
    record_round,
    replay_ledger,
    replay_statistics,
    trace_to_csv,
    write_trace,
)
from saobandit.errors import (
    InvalidProbabilityError,
    InvalidRewardError,
    ModelMismatchError,
    UndefinedAverageError,
)


def test_record_round_importance_weight():
    s = record_round(ArmStatistics(2), 0, 0.7, 0.5)
    assert s.estimated[0] == pytest.approx(1.4)
    assert s.realized[0] == 0.7
    assert s.plays == [1, 0]
    assert s.t == 1
    assert s.estimated[1] == 0.0 and s.realized[1] == 0.0


def test_record_round_zero_reward():
    s = ArmStatistics(2)
    record_round(s, 0, 0.3, 0.5)
    before = (s.estimated[0], s.realized[0])
    record_round(s, 0, 0.0, 0.25)
    assert (s.estimated[0], s.realized[0]) == before
    assert s.plays[0] == 2


@pytest.mark.parametrize("prob", [0.0, -0.1])
def test_record_round_rejects_bad_probability(prob):
    with pytest.raises(InvalidProbabilityError):
        record_round(ArmStatistics(2), 0, 0.5, prob)


@pytest.mark.parametrize("reward", [-0.01, 1.01, float("nan")])
def test_record_round_rejects_bad_reward(reward):
    with pytest.raises(InvalidRewardError):
        record_round(ArmStatistics(2), 0, reward, 0.5)


def test_record_round_rejects_bad_arm():
    with pytest.raises(IndexError):
        record_round(ArmStatistics(2), 2, 0.5, 0.5)


def test_estimator_unbiased_monte_carlo():
    # fixed g = 0.6 observed with probability 0.2: increments are 3 or 0
    rng = np.random.default_rng(11)
    m = 100_000
    inc = np.where(rng.random(m) < 0.2, 0.6 / 0.2, 0.0)
    assert abs(inc.mean() - 0.6) <= 3 * inc.std() / math.sqrt(m)


def test_averages():
    s = ArmStatistics(2, t=2, plays=[1, 1], realized=[0.7, 0.0], estimated=[1.4, 0.0])
    assert estimated_average(s, 0, 2) == pytest.approx(0.7)
    s = ArmStatistics(1, t=3, plays=[3], realized=[0.0], estimated=[0.0])
    assert realized_average(s, 0) == 0.0


def test_averages_degenerate():
    s = ArmStatistics(2, t=5, plays=[5, 0], realized=[2.0, 0.0], estimated=[4.0, 0.0])
    assert estimated_average(s, 1) == 0.0
    with pytest.raises(UndefinedAverageError):
        realized_average(s, 1)
    with pytest.raises(UndefinedAverageError):
        estimated_average(ArmStatistics(2), 0)


def test_adversarial_regret_arithmetic():
    led = RegretLedger(2, benchmark=[10.0, 7.0], collected=8.0)
    assert adversarial_regret(led) == 2.0


def test_adversarial_regret_always_best_is_zero():
    rng = np.random.default_rng(0)
    rows = rng.random((200, 3))
    rows[:, 1] += 1.0
    rows /= 2.0
    led = RegretLedger(3)
    for row in rows:
        led.add_round(list(row), 1)
    assert led.best_arm() == 1
    assert adversarial_regret(led) == 0.0


def test_adversarial_regret_replay_against_matrix():
    rng = np.random.default_rng(5)
    matrix = rng.random((100, 2)).tolist()
    led = RegretLedger(2)
    trace = []
    for t, row in enumerate(matrix, start=1):
        arm = int(rng.integers(2))
        led.add_round(row, arm)
        trace.append(RoundRecord(t, (0.5, 0.5), arm, row[arm], "uniform"))
    # independent recomputation
    best = max(sum(r[i] for r in matrix) for i in range(2))
    got = sum(matrix[r.t - 1][r.chosen] for r in trace)
    assert adversarial_regret(led) == pytest.approx(best - got, abs=1e-12)
    assert adversarial_regret(replay_ledger(trace, matrix, 2)) == adversarial_regret(led)


@pytest.mark.parametrize("plays,expected", [([100, 0], 0.0), ([0, 100], 20.0)])
def test_pseudo_regret_two_arm(plays, expected):
    led = RegretLedger(2, mu=(0.6, 0.4))
    for arm, count in enumerate(plays):
        for _ in range(count):
            led.add_round([0.0, 0.0], arm)
    assert pseudo_regret(led) == pytest.approx(expected)
    if expected == 0.0:
        assert pseudo_regret(led) == 0.0


def test_pseudo_regret_hand_sum():
    led = RegretLedger(3, mu=(0.9, 0.5, 0.5))
    for arm, count in enumerate((50, 25, 25)):
        for _ in range(count):
            led.add_round([0.0] * 3, arm)
    assert pseudo_regret(led) == pytest.approx(20.0)


def test_pseudo_regret_needs_means():
    with pytest.raises(ModelMismatchError):
        pseudo_regret(RegretLedger(2))


def test_roundrecord_check():
    RoundRecord(1, (0.25, 0.75), 1, 0.5, "x").check()
    with pytest.raises(InvalidProbabilityError):
        RoundRecord(1, (0.3, 0.6), 1, 0.5, "x").check()
    with pytest.raises(InvalidProbabilityError):
        RoundRecord(1, (1.1, -0.1), 0, 0.5, "x").check()
    with pytest.raises(InvalidRewardError):
        RoundRecord(1, (0.5, 0.5), 0, 1.5, "x").check()
    with pytest.raises(ValueError):
        RoundRecord(1, (0.5, 0.5), 0, 0.5, "x", "bogus").check()


@st.composite
def episodes(draw):
    k = draw(st.integers(2, 6))
    n = draw(st.integers(1, 60))
    rounds = []
    for t in range(1, n + 1):
        w = draw(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k))
        s = math.fsum(w)
        p = tuple(x / s for x in w)
        arm = draw(st.integers(0, k - 1))
        rounds.append(RoundRecord(t, p, arm, draw(st.floats(0.0, 1.0)), "p"))
    return k, rounds


@given(episodes())
def test_statistics_invariants(ep):
    k, rounds = ep
    s = ArmStatistics(k)
    prev = list(s.estimated)
    for rec in rounds:
        s.record(rec.chosen, rec.reward, rec.p[rec.chosen])
        assert sum(s.plays) == s.t
        for i in range(k):
            assert 0.0 <= s.realized[i] <= s.plays[i]
            assert s.estimated[i] >= 0.0
            if i != rec.chosen:
                assert s.estimated[i] == prev[i]
        prev = list(s.estimated)
    assert replay_statistics(rounds, k) == s


@given(episodes(), st.lists(st.floats(0.0, 1.0), min_size=6, max_size=6))
def test_pseudo_regret_nonnegative(ep, mu):
    k, rounds = ep
    led = RegretLedger(k, mu=tuple(mu[:k]))
    for rec in rounds:
        led.add_round([0.0] * k, rec.chosen)
    assert pseudo_regret(led) >= 0.0
    assert led.collected <= led.t and all(b <= led.t for b in led.benchmark)


@given(episodes())
def test_trace_csv_round_trip(tmp_path_factory, ep):
    k, rounds = ep
    path = tmp_path_factory.mktemp("trace") / "t.csv"
    write_trace(path, rounds, k)
    back, k2 = read_trace(path)
    assert k2 == k and back == rounds
    assert trace_to_csv(back, k) == path.read_text()


def test_trace_header():
    text = trace_to_csv([RoundRecord(1, (0.5, 0.5), 0, 1.0, "sao")], 2)
    assert text.splitlines()[0] == "t,phase,chosen,reward,fired_test,p_0,p_1"
