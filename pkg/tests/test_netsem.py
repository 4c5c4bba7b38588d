import pytest
from hypothesis import given, settings, strategies as st

from refsim.netsem import (Alloc, AssertionFailed, Cas, Check, Coin, Configuration, Deliver,
                           Drop, FairPolicy, Fork, Halt, Load, Loc, NewSocket, RandomPolicy,
                           Receive, Send, SocketAddr, SocketBind, Store, StuckThread,
                           ThreadStep, events_of, make_policy)
from refsim.netsem.export import dumps, view_record

A, B = SocketAddr("a", 1), SocketAddr("b", 1)


def pinger(n):
    s = yield NewSocket()
    yield SocketBind(s, A)
    got = []
    for i in range(n):
        yield Send(s, f"ping{i}", B)
        got.append((yield Receive(s)).body)
    return got


def ponger(n):
    s = yield NewSocket()
    yield SocketBind(s, B)
    for _ in range(n):
        m = yield Receive(s)
        yield Send(s, m.body.replace("ping", "pong"), m.src)
    return "done"


def drive(conf, policy, limit=10_000):
    views = []
    for i in range(1, limit + 1):
        if not conf.enabled_steps() or conf.quiescent():
            break
        lbl = policy.choose(conf)
        tid, eff, res, evs = conf.step(lbl)
        views.append(conf.view(i, lbl, tid, eff, res, evs))
    return views


def ping_conf(n=3, seed=0):
    c = Configuration(coin_seed=seed)
    c.spawn("a", pinger(n))
    c.spawn("b", ponger(n))
    return c


def test_ping_pong_lossless():
    c = ping_conf(3)
    drive(c, FairPolicy(1))
    assert c.halted == {0: ["pong0", "pong1", "pong2"], 1: "done"}
    assert c.conservation_ok()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_conservation_under_random_loss(seed):
    c = ping_conf(4, seed)
    drive(c, RandomPolicy(seed, allow_drop=True), limit=300)
    assert c.conservation_ok()
    assert len(c.sent) == len(c.soup) + len(c.buffered_ids()) + len(c.consumed) + len(c.dropped)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_same_seed_same_trace(seed):
    def run():
        c = ping_conf(3, seed)
        return [dumps(view_record(v)) for v in drive(c, FairPolicy(seed, drop_p=0.3))]
    assert run() == run()


def test_heap_ops_and_cas():
    def prog():
        l = yield Alloc(5, "x")
        ok1 = yield Cas(l, 5, 6)
        ok2 = yield Cas(l, 5, 7)
        yield Store(l, (yield Load(l)) + 1)
        return ok1, ok2, (yield Load(l))
    c = Configuration()
    c.spawn("n", prog())
    drive(c, RandomPolicy(0))
    assert c.halted[0] == (True, False, 7)
    assert c.heaps["n"][Loc("n", 0)] == 7


def test_location_counters_are_per_node():
    def prog():
        return (yield Alloc(0))
    c = Configuration()
    c.spawn("p", prog())
    c.spawn("q", prog())
    drive(c, RandomPolicy(0))
    assert c.halted == {0: Loc("p", 0), 1: Loc("q", 0)}


def test_fork_returns_child_tid():
    def child():
        yield Halt("kid")

    def parent():
        return (yield Fork(child(), "kid"))
    c = Configuration()
    c.spawn("n", parent())
    drive(c, RandomPolicy(0))
    assert c.halted == {0: 1, 1: "kid"}


def test_failed_check_halts_with_assertion_failed():
    def prog():
        yield Check(False, "boom")
        return "unreachable"
    c = Configuration()
    c.spawn("n", prog())
    views = drive(c, RandomPolicy(0))
    assert c.halted[0] == AssertionFailed("boom")
    assert events_of(views, {"kind": "check"})[0].ok is False


def test_program_exception_makes_thread_stuck():
    def prog():
        yield Alloc(1)
        raise RuntimeError("bad")
    c = Configuration()
    c.spawn("n", prog())
    c.step(ThreadStep(0))
    with pytest.raises(StuckThread):
        c.step(ThreadStep(0))


def test_foreign_bind_is_stuck():
    def prog():
        s = yield NewSocket()
        yield SocketBind(s, SocketAddr("elsewhere", 1))
    c = Configuration()
    c.spawn("n", prog())
    c.step(ThreadStep(0))
    with pytest.raises(StuckThread):
        c.step(ThreadStep(0))


def test_buffers_are_fifo():
    def sender():
        s = yield NewSocket()
        yield SocketBind(s, A)
        for i in range(5):
            yield Send(s, str(i), B)

    def receiver():
        s = yield NewSocket()
        yield SocketBind(s, B)
        out = []
        for _ in range(5):
            out.append((yield Receive(s)).body)
        return out
    c = Configuration()
    c.spawn("b", receiver())
    c.spawn("a", sender())
    for _ in range(2):
        c.step(ThreadStep(0))
    for _ in range(7):
        c.step(ThreadStep(1))
    for mid in sorted(c.soup, reverse=True):
        c.step(Deliver(mid))
    drive(c, RandomPolicy(0, allow_drop=False))
    assert c.halted[0] == ["4", "3", "2", "1", "0"]


def test_drop_removes_from_soup():
    c = ping_conf(1)
    for _ in range(3):
        c.step(ThreadStep(0))
    (mid,) = c.soup
    c.step(Drop(mid))
    assert not c.soup and c.dropped == [mid]
    assert c.conservation_ok()


def test_coin_overrides():
    def prog():
        out = []
        for _ in range(3):
            out.append((yield Coin()))
        return out
    c = Configuration(coin_overrides={"n": [True, False, True]})
    c.spawn("n", prog())
    drive(c, RandomPolicy(0))
    assert c.halted[0] == [True, False, True]


def spinner(k):
    for _ in range(k):
        yield Alloc(0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 1000), st.integers(1, 6), st.integers(2, 8))
def test_fair_policy_thread_window(seed, W, nthreads):
    c = Configuration()
    for i in range(nthreads):
        c.spawn(f"n{i}", spinner(40))
    pol = FairPolicy(seed, W=W)
    last = {t: 0 for t in range(nthreads)}
    k = 0
    while c.live:
        lbl = pol.choose(c)
        k += 1
        for t in c.live:
            assert k - last[t] <= max(W, nthreads)
        last[lbl.tid] = k
        c.step(lbl)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 1000), st.floats(0.0, 0.5))
def test_fair_policy_message_deadline(seed, drop_p):
    D = 12
    c = ping_conf(6, seed)
    pol = FairPolicy(seed, W=4, D=D, drop_p=drop_p)
    born = {}
    k = 0
    while c.enabled_steps() and not c.quiescent() and k < 2000:
        k += 1
        for mid in c.soup:
            born.setdefault(mid, k)
            if c.deliverable(c.soup[mid]):
                assert k - born[mid] <= D
        c.step(pol.choose(c))


def test_starved_route_always_drops():
    c = ping_conf(1)
    pol = FairPolicy(0, starve_routes=[("a", "b")])
    views = drive(c, pol, limit=200)
    assert c.dropped and not events_of(views, {"kind": "recv"})


def test_make_policy_kinds():
    assert isinstance(make_policy({"kind": "fair", "W": 3}, 1), FairPolicy)
    assert isinstance(make_policy({"kind": "random"}, 1), RandomPolicy)
    with pytest.raises(ValueError):
        make_policy({"kind": "other"}, 1)
