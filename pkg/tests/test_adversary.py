import pytest
from hypothesis import given, settings, strategies as st

from intersim.adversary import (
    Adversary,
    AdversaryError,
    ArrivalSchedule,
    FailureModel,
    FailurePattern,
    enumerate_adversaries,
    history,
    iter_failure_patterns,
    iter_schedules,
    validate_adversary,
)
from intersim.topology import validate_intersection, validate_transmission_env

from oracles import count_crash_patterns, count_schedules


@pytest.fixture
def two_lane():
    spec = validate_intersection([0, 1], [2])
    return spec, validate_transmission_env(spec=spec)


def test_single_agent_single_round(two_lane):
    spec, env = two_lane
    space = enumerate_adversaries("NF", ["i"], 1, spec, env)
    assert len(space) == 3
    assert not space.truncated


def test_two_agents_three_rounds_schedule_count(two_lane):
    spec, env = two_lane
    n = len(list(iter_schedules(["i", "j"], 3, spec)))
    assert n == count_schedules(2, 3, 2, 1)
    assert n == 43  # frozen from the brute-force oracle


def test_schedule_counts_match_oracle():
    spec = validate_intersection([0, 1], [2, 3])
    for pool, h in [(1, 2), (2, 2), (2, 3), (3, 2)]:
        agents = [f"x{k}" for k in range(pool)]
        assert len(list(iter_schedules(agents, h, spec))) == count_schedules(pool, h, 2, 2)


def test_so_pattern_count():
    assert len(list(iter_failure_patterns("SO", ["i", "j"], 3))) == 64


def test_cr_pattern_count():
    assert len(list(iter_failure_patterns("CR", ["i", "j"], 3))) == count_crash_patterns(2, 3)


def test_nf_valid_by_default(two_lane):
    spec, env = two_lane
    adv = Adversary("x", ArrivalSchedule.from_mapping({"i": (1, 0, 2)}), env)
    assert validate_adversary(adv, FailureModel.NF, 3) is adv


def test_cr_recovery_rejected(two_lane):
    spec, env = two_lane
    fp = FailurePattern(transmit_off=frozenset({(2, "i")}))
    adv = Adversary("x", ArrivalSchedule.from_mapping({"i": (1, 0, 2)}), env, fp)
    with pytest.raises(AdversaryError):
        validate_adversary(adv, "CR", 4)
    validate_adversary(adv, "SO", 4)


def test_receive_failure_rejected_in_so(two_lane):
    spec, env = two_lane
    fp = FailurePattern(receive_off=frozenset({(0, "i")}))
    adv = Adversary("x", ArrivalSchedule(), env, fp)
    with pytest.raises(AdversaryError):
        validate_adversary(adv, "SO", 2)


def test_colliding_arrivals_rejected(two_lane):
    spec, env = two_lane
    sched = ArrivalSchedule.from_mapping({"i": (3, 1, 2), "j": (3, 1, 2)})
    with pytest.raises(AdversaryError):
        validate_adversary(Adversary("x", sched, env), "NF", 3)


def test_history_basics(two_lane):
    spec, env = two_lane
    adv = Adversary("x", ArrivalSchedule.from_mapping({"i": (1, 0, 2)}), env)
    assert len(history(adv, 0)) == 0
    h1 = history(adv, 1)
    assert ("i", 0, 2) in h1.rounds[0].arrivals


def test_histories_agree_before_difference(two_lane):
    spec, env = two_lane
    a = Adversary("a", ArrivalSchedule.from_mapping({"i": (1, 0, 2), "j": (3, 0, 2)}), env)
    b = Adversary("b", ArrivalSchedule.from_mapping({"i": (1, 0, 2), "j": (3, 1, 2)}), env)
    assert history(a, 2).rounds == history(b, 2).rounds
    assert history(a, 3).rounds != history(b, 3).rounds


def test_caps(two_lane):
    spec, env = two_lane
    space = enumerate_adversaries("SO", ["i", "j"], 2, spec, env, caps=10)
    assert len(space) == 10 and space.truncated
    with pytest.raises(AdversaryError):
        enumerate_adversaries("NF", ["i"], 1, spec, env, caps=0)


@pytest.mark.parametrize("model", ["NF", "CR", "SO"])
def test_enumeration_is_deterministic_and_valid(two_lane, model):
    spec, env = two_lane
    a = enumerate_adversaries(model, ["i", "j"], 2, spec, env)
    b = enumerate_adversaries(model, ["i", "j"], 2, spec, env)
    assert a.adversaries == b.adversaries
    for adv in a:
        validate_adversary(adv, model, 2)


@settings(max_examples=40)
@given(st.integers(1, 3), st.sampled_from(["NF", "CR", "SO"]), st.data())
def test_history_prefix_property(horizon, model, data):
    spec = validate_intersection([0, 1], [2])
    env = validate_transmission_env(spec=spec)
    space = enumerate_adversaries(model, ["i", "j"], horizon, spec, env)
    adv = data.draw(st.sampled_from(space.adversaries))
    for m in range(horizon):
        assert history(adv, m + 1).rounds[:m] == history(adv, m).rounds
