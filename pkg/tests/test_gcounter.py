import pytest
from hypothesis import assume, given, settings, strategies as st

from refsim.netsem import FairPolicy
from refsim.protocols import gcounter as gc
from refsim.refinement import check_rel_all_prefixes

N = 3
vec = st.lists(st.integers(0, 20), min_size=N, max_size=N).map(tuple)
state = st.lists(vec, min_size=N, max_size=N).map(tuple)


@given(vec, vec, vec)
def test_merge_is_a_join(a, b, c):
    assert gc.merge(a, b) == gc.merge(b, a)
    assert gc.merge(a, gc.merge(b, c)) == gc.merge(gc.merge(a, b), c)
    assert gc.merge(a, a) == a
    assert gc.leq(a, gc.merge(a, b)) and gc.leq(b, gc.merge(a, b))
    assert gc.leq(a, b) == (gc.merge(a, b) == b)


@given(vec, st.integers(0, N - 1))
def test_inc_grows_by_one(a, i):
    b = gc.vect_inc(a, i)
    assert gc.leq(a, b) and gc.vect_sum(b) == gc.vect_sum(a) + 1


@given(st.lists(st.integers(0, 10**6), max_size=8).map(tuple))
def test_ser_round_trip(v):
    assert gc.deser(gc.ser(v)) == v


@pytest.mark.parametrize("text", ["", "3", "3|1,2", "2|1,x", "x|1", "1|-1", "2|1,2,3"])
def test_deser_rejects_malformed(text):
    with pytest.raises(ValueError):
        gc.deser(text)


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        gc.merge((1, 2), (1, 2, 3))


@given(state)
def test_successors_are_steps(d):
    for e in gc.gc_successors(d):
        assert gc.gc_is_step(d, e)


@given(state, st.integers(0, N - 1), st.integers(0, N - 1))
def test_merging_another_row_is_a_step(d, i, j):
    e = gc.apply_step(d, i, d[j])
    assume(e != d)
    assert gc.gc_is_step(d, e)


def test_merge_from_nowhere_is_not_a_step():
    d = gc.gc_init(2)
    assert not gc.gc_is_step(d, ((5, 0), (0, 0)))
    assert gc.gc_is_step(d, ((1, 0), (0, 0)))


@given(state)
def test_encode_decode(d):
    assert gc.decode(gc.encode(d)) == d


def test_conv_and_stab_verdicts():
    z, one = (0, 0), (1, 0)
    model = [(z, z), (one, z), (one, z), (one, one)]
    assert gc.model_stab(model).detail["k"] == 1
    assert gc.model_conv(model, one).detail["k"] == 3
    assert gc.model_ev_cons(model, True, 10).status == "pass"
    stuck = [(z, z), (one, z)] + [(one, z)] * 20
    assert gc.model_ev_cons(stuck, True, 5).status == "fail"
    assert gc.model_ev_cons(stuck, True, 50).status == "inconclusive"
    assert gc.model_ev_cons(stuck, False, 5).status == "inconclusive"


def test_model_fair_lag():
    z, one = (0, 0), (1, 0)
    model = [(z, z), (one, z)] + [(one, z)] * 5 + [(one, one)] * 3
    assert gc.model_fair(model, 10).status == "pass"
    assert gc.model_fair(model, 10).detail["max_lag"] == 6
    assert gc.model_fair(model, 3).status == "fail"


def test_net_fair_del_verdicts():
    log = {(0, 1): [(5, "a"), (10, "b")], (1, 0): [(3, "c")]}
    got = {(0, 1): {"b"}, (1, 0): {"c"}}
    assert gc.net_fair_del(log, got, 2, 100, 20).status == "pass"
    assert gc.net_fair_del(log, {(1, 0): {"c"}}, 2, 100, 20).status == "fail"
    assert gc.net_fair_del(log, {(1, 0): {"c"}}, 2, 24, 20).status == "inconclusive"


def test_combine_order():
    assert gc.combine("pass", "inconclusive") == "inconclusive"
    assert gc.combine("inconclusive", "fail", "pass") == "fail"
    assert gc.combine() == "pass"


@pytest.mark.parametrize("seed", range(3))
def test_fair_runs_converge(seed):
    out = gc.run(3, 5, FairPolicy(seed, drop_p=0.1), seed, horizon=50_000, settle=2000)
    assert out.ok, out.verdicts
    assert out.result.model.last[0] == (5, 5, 5)
    for q in out.queries.values():
        assert q == sorted(q) and len(q) == 5


def test_relation_on_every_prefix():
    out = gc.run(2, 2, FairPolicy(1, drop_p=0.1), 1, horizon=3000, settle=300)
    topo = gc.setup(2, 2)[1]
    assert check_rel_all_prefixes(gc.GcMainRel(topo), out.result.exec, out.result.model) is True


def test_starved_route_fails_delivery_fairness():
    pol = FairPolicy(0, drop_p=0.1, starve_routes=[("r0", "r1")])
    out = gc.run(3, 5, pol, 0, horizon=6000)
    assert out.verdicts["net_fair_del"].status == "fail"
    assert out.verdicts["net_fair_del"].detail["route"] == "0->1"
    assert out.result.ok
