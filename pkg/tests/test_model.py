import random

import pytest
from hypothesis import given, settings, strategies as st

from refsim.model import (ComparatorError, FairnessModel, Silent, Step, Sts, WfOrder,
                          check_locally_fair_terminating, destutter, lift, live_init,
                          live_is_step, live_labels, live_successors, valid_f_trace)
from refsim.traces import FiniteTrace
from refsim.protocols import yesno


def test_sts_is_step_defaults_to_successors():
    s = Sts(0, lambda n: [n + 1, n + 2])
    assert s.is_step(3, 5) and not s.is_step(3, 6)


def countdown(n=3):
    """One role that counts down to zero; a second role that idles once."""
    def enabled(s):
        return frozenset(r for r, ok in (("dec", s[0] > 0), ("idle", s[1])) if ok)

    def step(s, r):
        if r == "dec" and s[0] > 0:
            return [(s[0] - 1, s[1])]
        if r == "idle" and s[1]:
            return [(s[0], 0)]
        return []
    return FairnessModel((n, 1), frozenset({"dec", "idle"}), enabled, step, lambda s: 2)


def test_live_init_assigns_all_enabled_roles():
    F = countdown()
    ls = live_init(F, 0)
    assert ls.under == (3, 1)
    assert ls.fuel == {"dec": 2, "idle": 2} and ls.owner == {"dec": 0, "idle": 0}


def test_silent_step_must_burn_own_fuel():
    F = countdown()
    ls = live_init(F, 0)
    same = type(ls).make(ls.under, ls.fuel, ls.owner)
    assert not live_is_step(F, ls, Silent(0), same)
    burnt = type(ls).make(ls.under, {"dec": 1, "idle": 1}, ls.owner)
    assert live_is_step(F, ls, Silent(0), burnt)
    assert not live_is_step(F, ls, Silent(7), burnt)


def test_fuel_cannot_go_negative():
    F = countdown()
    ls = type(live_init(F)).make((3, 1), {"dec": 0, "idle": 0}, {"dec": 0, "idle": 0})
    assert live_successors(F, ls, Silent(0)) == []


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 6))
def test_successors_are_steps(seed, depth):
    F = countdown()
    rng = random.Random(seed)
    ls = live_init(F, 0)
    for _ in range(depth):
        opts = [(l, n) for l in live_labels(ls) for n in live_successors(F, ls, l, (0, 1))]
        if not opts:
            break
        for l, n in opts:
            assert live_is_step(F, ls, l, n)
        ls = opts[rng.randrange(len(opts))][1]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 30))
def test_destutter_of_lifted_walk_is_valid(seed, depth):
    F = yesno.fyn_model(2, fuel_limit=2)
    sts = lift(F, tids=(0, 1), f_init=2)
    rng = random.Random(seed)
    t = FiniteTrace.singleton(sts.init)
    for _ in range(depth):
        succ = sts.successors(t.last)
        if not succ:
            break
        nxt = succ[rng.randrange(len(succ))]
        assert sts.is_step(t.last, nxt)
        t = t.extend(nxt)
    d = destutter(t, F)
    assert valid_f_trace(F, d)
    steps = sum(1 for _, l in list(t)[1:] if isinstance(l, Step))
    assert len(d) == steps + 1


def test_destutter_rejects_invalid_trace():
    F = countdown()
    ls = live_init(F, 0)
    with pytest.raises(ValueError):
        destutter(FiniteTrace([(ls, None), (ls, Silent(0))]), F)


def test_criterion_on_countdown():
    F = countdown()
    order = WfOrder(lambda a, b: a[0] <= b[0] and a[1] <= b[1], lambda s: (s[0] + s[1],))
    states = [(m, i) for m in range(4) for i in (0, 1)]
    assert check_locally_fair_terminating(F, order, lambda s: "dec" if s[0] else "idle",
                                          states).ok
    bad = check_locally_fair_terminating(F, order, lambda s: "idle", states)
    assert not bad.ok and bad.failure["condition"] == 2


def test_criterion_rejects_rank_that_does_not_descend():
    F = countdown()
    order = WfOrder(lambda a, b: a[0] <= b[0] and a[1] <= b[1], lambda s: (0,))
    with pytest.raises(ComparatorError):
        check_locally_fair_terminating(F, order, lambda s: "dec", [(2, 1)])
