import pytest
from hypothesis import given, settings, strategies as st

from refsim.model import check_locally_fair_terminating, valid_f_trace
from refsim.netsem import FairPolicy, RandomPolicy
from refsim.protocols import yesno as yn


def test_initial_state():
    assert yn.fyn_init(5) == (5, 1, 1, 1)
    assert yn.fyn_enabled((5, 1, 1, 1)) == {yn.YES, yn.NO}


@pytest.mark.parametrize("k", [1, 2, 5, 10])
def test_dead_ends(k):
    # Yes may shut down at (1, 1, 1, 1) in the model, which strands No
    F = yn.fyn_model(k)
    dead = [s for s in yn.reachable_states(k) if not F.transitions(s)]
    assert dead == [(0, 1, 0, 0), (1, 1, 0, 1)]


def test_reachable_oracle_k3():
    assert len(yn.reachable_states(3)) == 12
    assert (1, 0, 0, 1) in yn.reachable_states(3)


def test_criterion_holds_with_guarded_progress():
    r = yn.check_criterion(10)
    assert r.ok and r.states == 88


def test_flag_progress_fails_where_a_role_is_gone():
    r = yn.check_criterion(10, yn.progress_by_flag)
    assert not r.ok and r.failure["from"] == (0, 0, 1, 0)
    r = check_locally_fair_terminating(yn.fyn_model(10), yn.FYN_ORDER, yn.progress_by_flag,
                                       yn.reachable_states(10))
    assert not r.ok and r.failure["from"] == (0, 1, 0, 1)


def test_constant_yes_fails_condition_two():
    r = yn.check_criterion(10, lambda s: yn.YES)
    assert not r.ok and r.failure["condition"] == 2 and r.failure["from"] == (0, 0, 0, 1)


def test_rank_descends_along_strict_order():
    states = yn.all_states(4)
    for a in states:
        for b in states:
            if yn.fyn_leq(a, b) and a != b:
                assert yn.fyn_rank(a) < yn.fyn_rank(b)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_fair_runs_terminate(seed, k):
    out = yn.run(k, FairPolicy(seed), seed)
    assert out.ok, out.result.violation
    assert out.final == (0, 1, 0, 0)
    assert (1, 1, 0, 1) not in [u for u, _ in out.destuttered]
    assert out.min_fuel > 0
    assert valid_f_trace(yn.fyn_model(k), out.destuttered)


def test_random_schedule_keeps_relation_or_underflows():
    out = yn.run(3, RandomPolicy(3), 3, f_init=30, fuel_limit=30)
    if not out.result.ok:
        assert out.underflow
    else:
        assert out.valid_destutter


def test_tiny_fuel_underflows():
    out = yn.run(5, FairPolicy(0), 0, f_init=2, fuel_limit=2)
    assert not out.ok and out.underflow
    assert out.result.violation.kind == "NoCandidate"


def test_setup_rejects_zero():
    with pytest.raises(ValueError):
        yn.setup(0)
