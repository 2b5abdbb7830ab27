import pytest
from hypothesis import given, settings, strategies as st

from intersim.adversary import Adversary, ArrivalSchedule, history
from intersim.policy import (
    ConstantNext,
    CycleHeldNext,
    PolicyError,
    TablePolicy,
    check_conflict_free,
    check_efficient,
    check_fairness,
    check_pair_fairness,
    cyclic_policy,
    empty_policy,
    next_round_robin,
    priority_policy,
    traffic_light_policy,
)
from intersim.topology import Move, validate_transmission_env
from intersim.verdict import FAIL, INCONCLUSIVE, PASS

from conftest import space, spec_of


def test_cyclic_policy_cells(split):
    tl = traffic_light_policy(split)
    assert tl.period == 2
    assert tl.at_time(0) == {Move(0, 2), Move(0, 3)}
    assert tl.at_time(3) == {Move(1, 2), Move(1, 3)}


def test_cyclic_rejects_conflicting_cell(split):
    with pytest.raises(PolicyError):
        cyclic_policy([[(0, 2), (1, 2)]], split)


def test_cyclic_rejects_non_move(split):
    with pytest.raises(PolicyError):
        cyclic_policy([[(2, 0)]], split)


def test_cyclic_needs_cells():
    with pytest.raises(PolicyError):
        cyclic_policy([])


def test_compatible_pair_cell_accepted(split):
    pol = cyclic_policy([[(0, 2), (1, 3)], [(1, 2)]], split)
    assert check_conflict_free(pol, split).status == PASS


def test_priority_hand_trace(split):
    env = validate_transmission_env(spec=split)
    base = traffic_light_policy(split)
    pol = priority_policy({"a"}, base, split)
    on_lane1 = Adversary("x", ArrivalSchedule.from_mapping({"a": (1, 1, 2)}), env)
    on_lane0 = Adversary("y", ArrivalSchedule.from_mapping({"a": (1, 0, 2)}), env)
    assert pol.eval(history(on_lane1, 0)) == base.at_time(0)
    assert pol.eval(history(on_lane1, 1)) == {Move(1, 2), Move(1, 3)}
    # a waits on lane 0 while the base cell is lane 1's
    assert pol.eval(history(on_lane0, 1)) == frozenset()
    # a crossed in round 2 under the lane-0 cell, so no restriction afterwards
    assert pol.eval(history(on_lane0, 3)) == base.at_time(3)


def test_priority_needs_cyclic_base(split):
    with pytest.raises(PolicyError):
        priority_policy({"a"}, empty_policy(), split)


def test_time_free_policy_needs_history(split):
    pol = priority_policy({"a"}, traffic_light_policy(split), split)
    with pytest.raises(PolicyError):
        pol.at_time(0)


def test_next_functions(split):
    rr = next_round_robin(split)
    assert [rr.at_time(m) for m in range(4)] == [0, 1, 0, 1]
    held = CycleHeldNext(2, split)
    assert [held.at_time(m) for m in range(6)] == [0, 0, 1, 1, 0, 0]
    assert held.period == 4
    assert ConstantNext(1, split).at_time(5) == 1
    with pytest.raises(PolicyError):
        ConstantNext(2, split)
    with pytest.raises(PolicyError):
        CycleHeldNext(0, split)


def test_fairness_checks(split):
    assert check_fairness(traffic_light_policy(split), split).status == PASS
    assert check_fairness(empty_policy(), split).status == FAIL
    pol = priority_policy({"a"}, traffic_light_policy(split), split)
    assert check_fairness(pol, split).status == INCONCLUSIVE


def test_pair_fairness(split):
    rr = next_round_robin(split)
    assert check_pair_fairness(empty_policy(), rr, split).status == PASS
    assert check_pair_fairness(empty_policy(), ConstantNext(0, split), split).status == FAIL
    only0 = cyclic_policy([[(0, 2)]], split)
    v = check_pair_fairness(only0, ConstantNext(0, split), split)
    # (0,3) shares lane 0 with the permitted move, so only lane 1 starves
    assert v.status == FAIL and len(v.witnesses) == 2


def test_efficiency(split, tight):
    assert check_efficient(traffic_light_policy(tight), tight).status == PASS
    v = check_efficient(traffic_light_policy(split), split)
    assert v.status == FAIL
    assert check_efficient(cyclic_policy([[(0, 2), (0, 3), (1, 3)], [(1, 2), (1, 3)]], split), split).status == PASS
    assert check_efficient(cyclic_policy([[(0, 2), (1, 3)]], split), split).status == FAIL


def test_table_policy(split):
    sp = space("split", "NF", ("a", "b"), 1)
    hs = {history(adv, 1).rounds: frozenset({Move(0, 2)}) for adv in sp}
    good = TablePolicy(hs)
    assert check_conflict_free(good, split).status == PASS
    bad = TablePolicy({k: frozenset({Move(0, 2), Move(1, 2)}) for k in hs})
    assert check_conflict_free(bad, split).status == FAIL
    with pytest.raises(PolicyError):
        good.eval(history(sp.adversaries[0], 0))


def test_conflict_free_over_histories(split):
    pol = priority_policy({"a"}, traffic_light_policy(split), split)
    sp = space("split", "NF", ("a", "b"), 2)
    hs = [history(adv, m) for adv in sp for m in range(3)]
    v = check_conflict_free(pol, split, hs)
    assert v.status == INCONCLUSIVE and not v.witnesses


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 20), st.data())
def test_cyclic_depends_only_on_length(m, data):
    spec = spec_of("split")
    tl = traffic_light_policy(spec)
    sp = space("split", "SO", ("a", "b"), 3)
    a1 = data.draw(st.sampled_from(sp.adversaries))
    a2 = data.draw(st.sampled_from(sp.adversaries))
    k = m % 4
    assert tl.eval(history(a1, k)) == tl.eval(history(a2, k)) == tl.at_time(k)


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_priority_is_pure(data):
    spec = spec_of("split")
    sp = space("split", "NF", ("a", "b"), 3)
    adv = data.draw(st.sampled_from(sp.adversaries))
    m = data.draw(st.integers(0, 3))
    p1 = priority_policy({"a"}, traffic_light_policy(spec), spec)
    p2 = priority_policy({"a"}, traffic_light_policy(spec), spec)
    first = p1.eval(history(adv, m))
    assert first == p1.eval(history(adv, m)) == p2.eval(history(adv, m))
    assert first <= traffic_light_policy(spec).at_time(m)


@settings(max_examples=30)
@given(st.lists(st.sampled_from([(0, 2), (0, 3), (1, 2), (1, 3)]), min_size=1, max_size=3))
def test_single_cell_fairness_matches_union(cell):
    spec = spec_of("split")
    try:
        pol = cyclic_policy([cell], spec)
    except PolicyError:
        return
    v = check_fairness(pol, spec)
    assert (v.status == PASS) == (len(set(cell)) == 4)


@settings(max_examples=40)
@given(st.integers(2, 4), st.integers(1, 3), st.data())
def test_empty_policy_with_round_robin_is_pair_fair(n_in, n_out, data):
    from intersim.topology import validate_intersection

    lin = list(range(n_in))
    lout = list(range(n_in, n_in + n_out))
    moves = [(a, b) for a in lin for b in lout]
    compat = data.draw(st.lists(st.tuples(st.sampled_from(moves), st.sampled_from(moves)), max_size=6))
    spec = validate_intersection(lin, lout, compat)
    assert check_pair_fairness(empty_policy(), next_round_robin(spec), spec).status == PASS
