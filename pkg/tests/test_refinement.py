from hypothesis import given, settings, strategies as st

from refsim.netsem import FairPolicy, RandomPolicy
from refsim.protocols import incr
from refsim.refinement import (NO_CANDIDATE, RELATION_FAILED, STUCK_THREAD, AllRel, PredRel,
                               check_rel_all_prefixes, events_signature_ok, run_coupled)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_incr_refines_naturals(seed):
    res = incr.run(RandomPolicy(seed), 200)
    assert res.ok
    assert len(res.exec) == len(res.model) == 201
    assert check_rel_all_prefixes(incr.XiIncr(), res.exec, res.model) is True
    assert events_signature_ok(res.exec, res.conf)


def test_model_is_successor_or_stutter():
    res = incr.run(FairPolicy(3), 200)
    m = res.model.to_list()
    assert all(b in (a, a + 1) for a, b in zip(m, m[1:]))
    assert m[-1] > 0


def test_wrong_matcher_is_no_candidate():
    res = run_coupled(incr.setup(), 0, lambda e, m, v: [m.last + 2], incr.XiIncr(),
                      RandomPolicy(0), 50, sts=incr.nat_sts())
    assert res.violation.kind == NO_CANDIDATE
    assert res.violation.index == 1


def test_stuttering_matcher_breaks_relation():
    res = run_coupled(incr.setup(), 0, lambda e, m, v: [m.last], incr.XiIncr(),
                      RandomPolicy(0), 200, sts=incr.nat_sts())
    assert res.violation.kind == RELATION_FAILED
    assert res.model.last == 0


def test_program_crash_is_reported():
    from refsim.netsem import Configuration, Load, Loc

    def bad():
        yield Load(Loc("n0", 9))
    conf = Configuration()
    conf.spawn("n0", bad())
    res = run_coupled(conf, 0, lambda e, m, v: [m.last], PredRel(lambda e, m: True),
                      RandomPolicy(0), 10, sts=incr.nat_sts())
    assert res.violation.kind == STUCK_THREAD


def test_all_rel_conjunction():
    yes = PredRel(lambda e, m: True, "yes")
    no = PredRel(lambda e, m: m.last < 3, "small")
    res = run_coupled(incr.setup(), 0, incr.matcher, AllRel(yes, no), FairPolicy(0), 200,
                      sts=incr.nat_sts())
    assert res.violation.kind == RELATION_FAILED
    assert res.model.last == 2


def test_on_step_sees_every_accepted_step():
    seen = []
    res = incr.run(RandomPolicy(1), 30, on_step=lambda v, m: seen.append((v.index, m)))
    assert [i for i, _ in seen] == list(range(1, 31))
    assert [m for _, m in seen] == res.model.to_list()[1:]
