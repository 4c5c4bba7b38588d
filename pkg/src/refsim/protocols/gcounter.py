"""Grow-only counter CRDT: vector operations, the matrix model, replica
programs, the GcMainRel coupling relation and bounded liveness checkers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..model import Sts
from ..netsem.core import (Alloc, AllocEv, Cas, Check, Configuration, Fork, Load, Loc, NewSocket,
                           Receive, RecvEv, Send, SendEv, SocketAddr, SocketBind)
from ..netsem.sched import Policy
from ..refinement import CoupledResult, TraceRel, run_coupled

Vec = Tuple[int, ...]
GcState = Tuple[Vec, ...]

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


# -- vectors ----------------------------------------------------------------

def vect_mk(n: int, x: int = 0) -> Vec:
    return (x,) * n


def vect_inc(v: Vec, i: int) -> Vec:
    return v[:i] + (v[i] + 1,) + v[i + 1:]


def vect_sum(v: Vec) -> int:
    return sum(v)


def _same_len(a: Vec, b: Vec) -> None:
    if len(a) != len(b):
        raise ValueError(f"vector lengths differ: {len(a)} vs {len(b)}")


def merge(a: Vec, b: Vec) -> Vec:
    _same_len(a, b)
    return tuple(x if x >= y else y for x, y in zip(a, b))


def leq(a: Vec, b: Vec) -> bool:
    _same_len(a, b)
    return all(x <= y for x, y in zip(a, b))


def ser(v: Vec) -> str:
    return f"{len(v)}|" + ",".join(str(x) for x in v)


def deser(s: str) -> Vec:
    head, sep, rest = s.partition("|")
    if not sep or not head.isdigit():
        raise ValueError(f"malformed vector {s!r}")
    n = int(head)
    parts = rest.split(",") if rest else []
    if len(parts) != n or not all(p.isdigit() for p in parts):
        raise ValueError(f"malformed vector {s!r}")
    return tuple(int(p) for p in parts)


# -- model ------------------------------------------------------------------

def gc_init(n: int) -> GcState:
    return (vect_mk(n),) * n


def _set_row(d: GcState, i: int, row: Vec) -> GcState:
    return d[:i] + (row,) + d[i + 1:]


def incr_step(d: GcState, i: int) -> GcState:
    return _set_row(d, i, vect_inc(d[i], i))


def apply_step(d: GcState, i: int, v: Vec) -> Optional[GcState]:
    """Row ``i`` merged with ``v``; None unless ``v`` is below some row."""
    if not any(leq(v, r) for r in d):
        return None
    return _set_row(d, i, merge(d[i], v))


def gc_successors(d: GcState, pool: Sequence[Vec] = ()) -> List[GcState]:
    """IncrStep for every row, plus ApplyStep over ``pool`` (default: the rows)."""
    out = [incr_step(d, i) for i in range(len(d))]
    vs = list(pool) or list(d)
    for i in range(len(d)):
        for v in vs:
            e = apply_step(d, i, v)
            if e is not None and e != d and e not in out:
                out.append(e)
    return out


def gc_is_step(d: GcState, e: GcState) -> bool:
    if len(d) != len(e):
        return False
    diff = [i for i in range(len(d)) if d[i] != e[i]]
    if len(diff) != 1:
        return False
    i = diff[0]
    if e[i] == vect_inc(d[i], i):
        return True
    if not leq(d[i], e[i]):
        return False
    # smallest v with d[i] merged with v equal to e[i]
    v = tuple(y if y > x else 0 for x, y in zip(d[i], e[i]))
    return any(leq(v, r) for r in d)


def gc_sts(n: int) -> Sts:
    return Sts(gc_init(n), gc_successors, gc_is_step, encode=encode, name="gc")


def encode(d: GcState) -> str:
    return ";".join(ser(r) for r in d)


def decode(s: str) -> GcState:
    return tuple(deser(r) for r in s.split(";"))


# -- programs ---------------------------------------------------------------

def incr(m: Loc, i: int):
    while True:
        t = yield Load(m)
        ok = yield Cas(m, t, vect_inc(t, i), "incr")
        if ok:
            return


def query(m: Loc):
    t = yield Load(m)
    return vect_sum(t)


def perform_merge(m: Loc, m2: Vec):
    while True:
        t = yield Load(m)
        ok = yield Cas(m, t, merge(t, m2), ("merge", m2))
        if ok:
            return


def apply(m: Loc, sh: int):
    while True:
        msg = yield Receive(sh)
        m2 = deser(msg.body)
        yield from perform_merge(m, m2)


def broadcast(m: Loc, sh: int, nodes: Sequence[SocketAddr], i: int):
    others = [a for j, a in enumerate(nodes) if j != i]
    while True:
        body = ser((yield Load(m)))
        for a in others:
            yield Send(sh, body, a)


def install(addrlst: Sequence[SocketAddr], i: int, label):
    n = len(addrlst)
    m = yield Alloc(vect_mk(n), label)
    sh = yield NewSocket()
    yield SocketBind(sh, addrlst[i])
    yield Fork(apply(m, sh), f"apply{i}")
    yield Fork(broadcast(m, sh, addrlst, i), f"broadcast{i}")
    return m


def client(m: Loc, i: int, incrs: int):
    """Increment ``incrs`` times, querying after each; queries must be
    monotone and at least the number of own increments."""
    results = []
    for k in range(1, incrs + 1):
        yield from incr(m, i)
        q = yield from query(m)
        ok = q >= k and (not results or q >= results[-1])
        yield Check(ok, ("query", i, q))
        results.append(q)
    return results


def node(addrlst: Sequence[SocketAddr], i: int, incrs: int):
    m = yield from install(addrlst, i, i)
    return (yield from client(m, i, incrs))


@dataclass
class Topology:
    addrs: List[SocketAddr]
    main_tids: List[int] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.addrs)

    def index_of_ip(self, ip: str) -> Optional[int]:
        for j, a in enumerate(self.addrs):
            if a.ip == ip:
                return j
        return None


def setup(n: int, incrs: int = 5, seed: int = 0) -> Tuple[Configuration, Topology]:
    conf = Configuration(coin_seed=seed)
    topo = Topology([SocketAddr(f"r{i}", 80) for i in range(n)])
    for i in range(n):
        topo.main_tids.append(conf.spawn(topo.addrs[i].ip, node(topo.addrs, i, incrs), f"client{i}"))
    return conf, topo


# -- coupling ---------------------------------------------------------------

def make_matcher(topo: Topology):
    ips = {a.ip: j for j, a in enumerate(topo.addrs)}

    def matcher(exec_t, model_t, view):
        eff = view.effect
        if type(eff) is not Cas or view.result is not True:
            return [model_t.last]
        i = ips[eff.loc.ip]
        d = model_t.last
        if eff.tag == "incr":
            return [incr_step(d, i)]
        e = apply_step(d, i, eff.tag[1])
        return [e] if e is not None else []
    return matcher


@dataclass(frozen=True)
class _NodeSum:
    loc: Optional[Loc]
    sent_join: Dict[int, Vec]   # j -> join of heap vectors at earlier i->j sends
    recv_join: Vec              # join of all received vectors but the last
    recv_last: Optional[Vec]


class GcMainRel(TraceRel):
    """The four GcMainRel conditions, carried incrementally.

    (1) node i allocates exactly one location labelled i, and no network
    event of node i precedes it (the model row stays zero until then);
    (2) a vector sent i->j dominates the heap vector of node i at every
    earlier i->j send; (3) the heap vector of node i dominates every vector
    it received except possibly the last one; (4) heap vectors equal model
    rows.
    """

    name = "gc_main_rel"

    def __init__(self, topo: Topology):
        self.topo = topo
        self.ips = [a.ip for a in topo.addrs]
        self.idx = {ip: j for j, ip in enumerate(self.ips)}
        self.zero = vect_mk(topo.n)
        self.failure: Optional[str] = None

    def _fail(self, why: str):
        self.failure = why
        return None

    def _scan(self, nodes: Tuple[_NodeSum, ...], view, model: GcState):
        nodes = list(nodes)
        touched = set()
        for ev in view.events:
            t = type(ev)
            if t is AllocEv:
                i = ev.label if isinstance(ev.label, int) else None
                if i is None or not 0 <= i < len(nodes):
                    continue
                if nodes[i].loc is not None:
                    return self._fail(f"(1) second location labelled {i}")
                if ev.ip != self.ips[i]:
                    return self._fail(f"(1) location labelled {i} allocated on {ev.ip}")
                nodes[i] = _NodeSum(ev.loc, nodes[i].sent_join, nodes[i].recv_join, nodes[i].recv_last)
                touched.add(i)
            elif t is SendEv:
                i = self.idx.get(ev.msg.src.ip)
                j = self.idx.get(ev.msg.dst.ip)
                if i is None:
                    continue
                ns = nodes[i]
                if ns.loc is None:
                    return self._fail(f"(1) node {i} sends before allocating")
                if j is None:
                    continue
                try:
                    v = deser(ev.msg.body)
                except ValueError:
                    return self._fail(f"(2) unparsable body {ev.msg.body!r}")
                prev = ns.sent_join.get(j)
                if prev is not None and not leq(prev, v):
                    return self._fail(f"(2) {i}->{j} sent {v} below earlier heap {prev}")
                heap_now = view.heap(ns.loc.ip)[ns.loc]
                sj = dict(ns.sent_join)
                sj[j] = heap_now if prev is None else merge(prev, heap_now)
                nodes[i] = _NodeSum(ns.loc, sj, ns.recv_join, ns.recv_last)
            elif t is RecvEv:
                i = self.idx.get(ev.ip)
                if i is None:
                    continue
                ns = nodes[i]
                if ns.loc is None:
                    return self._fail(f"(1) node {i} receives before allocating")
                try:
                    v = deser(ev.msg.body)
                except ValueError:
                    return self._fail(f"(3) unparsable body {ev.msg.body!r}")
                rj = ns.recv_join if ns.recv_last is None else merge(ns.recv_join, ns.recv_last)
                nodes[i] = _NodeSum(ns.loc, ns.sent_join, rj, v)
                touched.add(i)
        ip = _ip_of(view, self.idx)
        if ip is not None:
            touched.add(self.idx[ip])
        for i in touched:
            ns = nodes[i]
            if ns.loc is None:
                continue
            h = view.heap(ns.loc.ip)[ns.loc]
            if not leq(ns.recv_join, h):
                return self._fail(f"(3) heap {h} of node {i} below received {ns.recv_join}")
        for i, ns in enumerate(nodes):
            row = model[i]
            if ns.loc is None:
                if row != self.zero:
                    return self._fail(f"(4) model row {i} nonzero before allocation")
            elif view.heap(ns.loc.ip)[ns.loc] != row:
                return self._fail(f"(4) heap of node {i} differs from model row")
        return tuple(nodes)

    def init(self, exec_t, model_t):
        n = self.topo.n
        start = tuple(_NodeSum(None, {}, self.zero, None) for _ in range(n))
        return self._scan(start, exec_t.last, model_t.last)

    def step(self, summary, exec_t, model_t):
        return self._scan(summary, exec_t.last, model_t.last)


def _ip_of(view, idx) -> Optional[str]:
    eff = view.effect
    loc = getattr(eff, "loc", None)
    if loc is not None and loc.ip in idx:
        return loc.ip
    return None


# -- bounded liveness -------------------------------------------------------

@dataclass
class Verdict:
    status: str
    detail: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == PASS

    def to_json(self) -> dict:
        return {"status": self.status, **self.detail}


def combine(*statuses: str) -> str:
    """fail beats inconclusive beats pass."""
    if FAIL in statuses:
        return FAIL
    if INCONCLUSIVE in statuses:
        return INCONCLUSIVE
    return PASS


def _diag(d: GcState) -> Vec:
    return tuple(d[i][i] for i in range(len(d)))


def model_stab(model: Sequence[GcState], settled: bool = True) -> Verdict:
    """Stability point: the last index at which the diagonal changes.

    ``settled`` says whether every increment-issuing thread has finished;
    without it the diagonal could still move after the horizon.
    """
    k = 0
    for t in range(1, len(model)):
        if _diag(model[t]) != _diag(model[t - 1]):
            k = t
    v = _diag(model[-1])
    status = PASS if settled else INCONCLUSIVE
    return Verdict(status, {"k": k, "v": list(v)})


def model_conv(model: Sequence[GcState], v: Vec) -> Verdict:
    """Earliest index from which every row equals ``v`` through the end."""
    target = tuple(v)
    t = len(model)
    while t > 0 and all(r == target for r in model[t - 1]):
        t -= 1
    if t == len(model):
        return Verdict(FAIL, {"v": list(v), "k": None})
    return Verdict(PASS, {"v": list(v), "k": t})


def model_ev_cons(model: Sequence[GcState], settled: bool, window: int) -> Verdict:
    """Stability implies convergence.  When the trace ends fewer than
    ``window`` steps after the stability point, a missing convergence point
    is inconclusive instead of a failure."""
    stab = model_stab(model, settled)
    conv = model_conv(model, _diag(model[-1]))
    detail = {"stab": stab.to_json(), "conv": conv.to_json()}
    if stab.status != PASS:
        return Verdict(INCONCLUSIVE if conv.status != PASS else PASS, detail)
    if conv.status == PASS:
        return Verdict(PASS, detail)
    if len(model) - 1 - stab.detail["k"] < window:
        return Verdict(INCONCLUSIVE, detail)
    return Verdict(FAIL, detail)


def model_fair(model: Sequence[GcState], window: int, every: int = 1) -> Verdict:
    """For all i, j and sample steps t, row i at t is below row j at some
    step in [t, t + window].  Samples too close to the end with no witness
    yet are inconclusive."""
    H = len(model) - 1
    n = len(model[0])
    worst = 0
    pending = 0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            w = 0
            for t in range(0, H + 1, every):
                ri = model[t][i]
                if w < t:
                    w = t
                while w <= H and not leq(ri, model[w][j]):
                    w += 1
                if w > H:
                    if t + window > H:
                        pending += 1
                        continue
                    return Verdict(FAIL, {"i": i, "j": j, "t": t, "reason": "never merged"})
                if w - t > window:
                    return Verdict(FAIL, {"i": i, "j": j, "t": t, "lag": w - t})
                worst = max(worst, w - t)
    status = INCONCLUSIVE if pending else PASS
    return Verdict(status, {"max_lag": worst, "pending": pending, "window": window})


def _routes(n: int) -> List[Tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def _max_gap(idx: Sequence[int], start: int, end: int) -> int:
    prev = start
    gap = 0
    for t in idx:
        gap = max(gap, t - prev)
        prev = t
    return max(gap, end - prev)


def net_fair_send(sends: Dict[Tuple[int, int], List[int]], n: int, start: int, H: int,
                  window: int) -> Verdict:
    """Sends on every route keep coming: no gap longer than ``window``."""
    if H - start < window:
        return Verdict(INCONCLUSIVE, {"reason": "horizon shorter than window"})
    gaps = {f"{i}->{j}": _max_gap(sends.get((i, j), []), start, H) for i, j in _routes(n)}
    bad = {r: g for r, g in gaps.items() if g > window}
    return Verdict(FAIL if bad else PASS, {"max_gap": max(gaps.values(), default=0),
                                           "violations": bad, "window": window})


def net_fair_rec(recvs: Dict[int, List[int]], n: int, start: int, H: int, window: int) -> Verdict:
    """Receives at every node keep coming: no gap longer than ``window``."""
    if H - start < window:
        return Verdict(INCONCLUSIVE, {"reason": "horizon shorter than window"})
    gaps = {str(j): _max_gap(recvs.get(j, []), start, H) for j in range(n)}
    bad = {r: g for r, g in gaps.items() if g > window}
    return Verdict(FAIL if bad else PASS, {"max_gap": max(gaps.values(), default=0),
                                           "violations": bad, "window": window})


def net_fair_del(send_log: Dict[Tuple[int, int], List[Tuple[int, str]]],
                 recv_bodies: Dict[Tuple[int, int], set], n: int, H: int,
                 window: int) -> Verdict:
    """Every i->j send is followed (or matched itself) by an i->j send whose
    message equals one received at j.

    Message equality is on content (source, destination, body).  A send
    without witness is a failure when it lies at least ``window`` steps
    before the end of the trace, and inconclusive otherwise.
    """
    pending = 0
    checked = 0
    for route in _routes(n):
        log = send_log.get(route, [])
        got = recv_bodies.get(route, set())
        witnessed = False
        for t, body in reversed(log):
            checked += 1
            if body in got:
                witnessed = True
            if witnessed:
                continue
            if H - t < window:
                pending += 1
                continue
            return Verdict(FAIL, {"route": f"{route[0]}->{route[1]}", "send_step": t,
                                  "checked": checked})
    status = INCONCLUSIVE if pending else PASS
    return Verdict(status, {"checked": checked, "pending": pending, "window": window})


# -- runs -------------------------------------------------------------------

@dataclass
class GcOutcome:
    seed: int
    result: CoupledResult
    queries: Dict[int, list]
    verdicts: Dict[str, Verdict]
    steps: int

    @property
    def ok(self) -> bool:
        return self.result.ok and all(v.status == PASS for k, v in self.verdicts.items()
                                      if k in ("ev_cons", "net_fair_del"))


def _ledgers(conf: Configuration, topo: Topology):
    idx = {a.ip: j for j, a in enumerate(topo.addrs)}
    sends: Dict[Tuple[int, int], List[int]] = {}
    send_log: Dict[Tuple[int, int], List[Tuple[int, str]]] = {}
    recvs: Dict[int, List[int]] = {}
    recv_bodies: Dict[Tuple[int, int], set] = {}
    for t, ev in conf.send_events:
        r = (idx[ev.msg.src.ip], idx[ev.msg.dst.ip])
        sends.setdefault(r, []).append(t)
        send_log.setdefault(r, []).append((t, ev.msg.body))
    for t, ev in conf.recv_events:
        j = idx[ev.ip]
        recvs.setdefault(j, []).append(t)
        recv_bodies.setdefault((idx[ev.msg.src.ip], j), set()).add(ev.msg.body)
    return sends, send_log, recvs, recv_bodies


def converged_stop(topo: Topology, settle: int):
    """Stop predicate: clients finished and all rows equal for ``settle`` steps.

    Once every row holds the same vector and no increment is left, every
    vector in flight is below it, so no later step can change the model.
    """
    since = [None]

    def stop(conf: Configuration, model: GcState, i: int) -> bool:
        if any(not conf.threads[t].halted for t in topo.main_tids) or \
                any(r != model[0] for r in model):
            since[0] = None
            return False
        if since[0] is None:
            since[0] = i
        return i - since[0] >= settle
    return stop


def run(n: int = 3, incrs: int = 5, policy: Optional[Policy] = None, seed: int = 0,
        horizon: int = 50_000, D: int = 32, window: Optional[int] = None,
        settle: Optional[int] = None, rel: Optional[TraceRel] = None,
        fair_every: int = 10, on_step=None) -> GcOutcome:
    """Coupled run with bounded liveness verdicts.

    ``window`` bounds the liveness checkers (default ``16 * D``).  With
    ``settle`` set the run stops once the model has been converged for that
    many steps; otherwise it runs to the horizon.
    """
    from ..netsem.sched import FairPolicy
    if policy is None:
        policy = FairPolicy(seed, D=D)
    window = 16 * D if window is None else window
    conf, topo = setup(n, incrs, seed)
    stop = converged_stop(topo, settle) if settle is not None else None
    res = run_coupled(conf, gc_init(n), make_matcher(topo), rel or GcMainRel(topo), policy,
                      horizon, sts=gc_sts(n), stop_when=stop,
                      on_step=on_step)
    model = res.model.to_list()
    H = len(model) - 1
    settled = all(conf.threads[t].halted for t in topo.main_tids)
    sends, send_log, recvs, recv_bodies = _ledgers(conf, topo)
    start = min((t for t, _ in conf.send_events), default=0)
    verdicts = {
        "ev_cons": model_ev_cons(model, settled, window),
        "model_fair": model_fair(model, window, fair_every),
        "net_fair_send": net_fair_send(sends, n, start, H, window),
        "net_fair_rec": net_fair_rec(recvs, n, start, H, window),
        "net_fair_del": net_fair_del(send_log, recv_bodies, n, H, window),
    }
    queries = {i: conf.halted.get(t) for i, t in enumerate(topo.main_tids)}
    return GcOutcome(seed, res, queries, verdicts, H)
