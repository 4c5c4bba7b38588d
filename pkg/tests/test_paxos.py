import random

import pytest
from hypothesis import given, settings, strategies as st

from refsim import explorer as ex
from refsim.netsem import FairPolicy
from refsim.protocols import paxos as px

VALS = ("x", "y")

msgs = st.one_of(
    st.tuples(st.just("1a"), st.integers(0, 99)),
    st.tuples(st.just("1b"), st.integers(0, 5), st.integers(0, 99),
              st.one_of(st.none(), st.tuples(st.integers(0, 99), st.sampled_from(VALS)))),
    st.tuples(st.just("2a"), st.integers(0, 99), st.sampled_from(VALS)),
    st.tuples(st.just("2b"), st.integers(0, 5), st.integers(0, 99), st.sampled_from(VALS)),
)


@given(msgs)
def test_wire_round_trip(m):
    assert px.parse(px.serialize(m)) == m


@pytest.mark.parametrize("body", ["", "1a", "1a:x", "2b:1:2", "9z:1", "decide:1:x"])
def test_parse_rejects_garbage(body):
    assert px.parse(body) is None


def test_ballots_and_quorums():
    assert [px.ballot(k, p, 2) for k in (1, 2) for p in (0, 1)] == [2, 3, 4, 5]
    with pytest.raises(ValueError):
        px.ballot(1, 2, 2)
    assert px.majority(3) == 2
    assert len(px.quorums(3)) == 4


def test_find_max_promise():
    assert px.find_max_promise([None, None]) is None
    assert px.find_max_promise([None, (3, "y"), (1, "x")]) == (3, "y")


def test_chosen_needs_a_quorum():
    m = {("2b", 0, 2, "x")}
    assert not px.chosen(m, "x", 3)
    assert px.chosen(m | {("2b", 1, 2, "x")}, "x", 3)
    assert px.chosen_values(m | {("2b", 1, 2, "x")}, 3) == {"x"}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_sdpl_steps_project_to_sdp(seed):
    rng = random.Random(seed)
    s = px.sdpl_init(2, 3)
    for _ in range(20):
        trs = px.sdpl_transitions(s, VALS, None, 2, skip_self=True)
        if not trs:
            break
        for _, t in trs:
            assert px.sdpl_is_step(s, t, None, VALS)
            assert px.project(t) == px.project(s) or px.sdp_is_step(px.project(s), px.project(t))
        s = trs[rng.randrange(len(trs))][1]
        assert px.sdpl_ballots_coherent(s)


def test_first_ballots_follow_counter():
    out = px.run(FairPolicy(0), 0)
    oneas = sorted(m[1] for m in out.result.model.last.msgs if m[0] == "1a")
    assert oneas[:2] == [2, 3]


@pytest.mark.parametrize("drop_p", [0.0, 0.1])
def test_runs_are_consistent(drop_p):
    for seed in range(10):
        out = px.run(FairPolicy(seed, drop_p=drop_p), seed, drop_p=drop_p)
        assert out.ok, (seed, out.result.violation)
        assert all(px.consistent(s, 3) for s in out.result.model)


def test_lossless_run_decides():
    out = px.run(FairPolicy(4), 4)
    assert out.client_value in VALS
    assert {lv[1] for lv in out.learner_values} == {out.client_value}


def test_suppressed_model_step_breaks_relation():
    out = px.run(FairPolicy(0), 0, suppress=3)
    assert out.result.violation is not None
    assert out.result.violation.kind == "RelationFailed"


def test_xi_holds_on_every_prefix():
    from refsim.refinement import check_rel_all_prefixes
    out = px.run(FairPolicy(2, drop_p=0.1), 2, drop_p=0.1)
    assert check_rel_all_prefixes(px.XiSdp(), out.result.exec, out.result.model) is True
