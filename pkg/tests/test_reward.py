import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aocsi.belief import AgedObservation, expected_reliability
from aocsi.errors import InvalidRewardParams
from aocsi.reward import ActionKind, RewardParams, channel_penalty, total_reward, transmit_reward

I, C, T = ActionKind.IDLE, ActionKind.PROBE, ActionKind.TRANSMIT


def test_action_encoding():
    assert [int(a) for a in ActionKind] == [0, 1, 2]
    assert [a.letter for a in ActionKind] == ["I", "C", "T"]
    assert ActionKind.from_letter("C") is C
    with pytest.raises(ValueError):
        ActionKind.from_letter("X")


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(eps_c=0.5, eps_t=0.4),
        dict(eps_c=0.0, eps_t=0.4),
        dict(eps_c=0.4, eps_t=0.4),
        dict(beta=-0.1),
        dict(r_suc=0.0, r_fail=1.0),
        dict(beta=math.inf),
    ],
)
def test_invalid_params(kwargs):
    base = dict(r_suc=1.0, r_fail=0.0, eps_t=0.4, eps_c=0.3, beta=1.8)
    base.update(kwargs)
    with pytest.raises(InvalidRewardParams):
        RewardParams(**base)


def test_transmit_reward_by_hand(paper_params):
    assert transmit_reward(paper_params, 0.82) == pytest.approx(0.42, abs=1e-15)
    assert transmit_reward(paper_params, 0.225) == pytest.approx(-0.175, abs=1e-15)


def test_transmit_reward_collapses_when_outcomes_pay_equally():
    params = RewardParams(r_suc=0.7, r_fail=0.7, eps_t=0.4, eps_c=0.3, beta=1.0)
    for r_hat in (0.0, 0.3, 1.0):
        assert transmit_reward(params, r_hat) == pytest.approx(0.3)


def test_transmit_reward_rejects_bad_probability(paper_params):
    with pytest.raises(ValueError):
        transmit_reward(paper_params, 1.2)


def test_channel_penalty(paper_params):
    assert channel_penalty(paper_params, 0.0756, T) == -0.0756
    assert channel_penalty(paper_params, 0.0756, I) == -0.0756
    assert channel_penalty(paper_params, 0.123, C) == -0.3
    assert channel_penalty(paper_params, 0.0, I) == 0.0
    with pytest.raises(ValueError):
        channel_penalty(paper_params, -1e-3, I)


def test_total_reward_by_hand(paper_params, paper_model):
    assert total_reward(paper_params, paper_model, AgedObservation(1, 2), T) == pytest.approx(0.28392, abs=1e-12)
    assert total_reward(paper_params, paper_model, AgedObservation(1, 0), I) == pytest.approx(-0.130725, abs=1e-12)
    assert total_reward(paper_params, paper_model, AgedObservation(1, 2), I) == pytest.approx(-0.13608, abs=1e-12)


def test_probe_reward_is_constant(paper_params, paper_model):
    values = {total_reward(paper_params, paper_model, AgedObservation(a, s), C)
              for a in range(1, 20) for s in range(3)}
    assert values == {-1.8 * 0.3}


def test_zero_beta_removes_age_dependence(paper_model):
    params = RewardParams(1.0, 0.0, 0.4, 0.3, 0.0)
    for s in range(3):
        for a in (I, C):
            vals = {total_reward(params, paper_model, AgedObservation(age, s), a) for age in range(1, 15)}
            assert len(vals) == 1


@settings(max_examples=100, deadline=None)
@given(age=st.integers(1, 60), s=st.integers(0, 2))
def test_transmit_minus_idle_is_the_transmission_gain(paper_params, paper_model, age, s):
    o = AgedObservation(age, s)
    diff = total_reward(paper_params, paper_model, o, T) - total_reward(paper_params, paper_model, o, I)
    assert diff == transmit_reward(paper_params, expected_reliability(paper_model, o))
