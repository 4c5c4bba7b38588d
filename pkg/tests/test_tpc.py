import itertools

from hypothesis import given, settings, strategies as st

from refsim.netsem import FairPolicy, RandomPolicy
from refsim.protocols import tpc
from refsim.refinement import NO_CANDIDATE, check_rel_all_prefixes

STATES = [tuple(p) for n in (1, 2, 3) for p in itertools.product(tpc.STATUS_NAMES, repeat=n)]


@given(st.sampled_from(STATES), st.sampled_from(STATES))
def test_is_step_matches_successors(d, e):
    assert tpc.tc_is_step(d, e) == (len(d) == len(e) and e in tpc.tc_successors(d))


def test_wire_agreement():
    assert tpc.wire_agreement([0, 1], [])
    assert tpc.wire_agreement([0], [0])
    assert not tpc.wire_agreement([0], [1])


def test_coins_forced_commit_commits():
    for seed in range(20):
        out = tpc.run(3, FairPolicy(seed), seed, coins="commit")
        assert out.ok and out.tm_result == "COMMITTED"
        assert check_rel_all_prefixes(tpc.TcRel(_topo(3)), out.result.exec, out.result.model)


def _topo(n):
    return tpc.setup(n)[1]


def test_forced_abort_aborts():
    out = tpc.run(3, FairPolicy(1), 1, coins="abort")
    assert out.ok and out.tm_result == "ABORTED"
    assert set(out.result.model.last) <= {tpc.ABORTED, tpc.WORKING}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_random_coins_keep_agreement(seed):
    out = tpc.run(3, RandomPolicy(seed, allow_drop=True), seed, horizon=2000)
    assert out.ok
    assert all(tpc.tc_agreement(d) for d in out.result.model)


def test_forbidding_commit_in_matcher_is_caught():
    out = tpc.run(2, FairPolicy(0), 0, coins="commit", forbid_commit=True)
    assert out.result.violation.kind == NO_CANDIDATE


def test_encode_decode():
    for d in STATES:
        assert tpc.decode(tpc.encode(d)) == d
