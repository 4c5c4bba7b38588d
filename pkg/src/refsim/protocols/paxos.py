"""Single-decree Paxos: the SDP model, its counter-lifted variant SDPL,
proposer/acceptor/learner/client programs and the wire/model coupling.

Model messages are tuples::

    ("1a", b)  ("1b", a, b, mv)  ("2a", b, v)  ("2b", a, b, v)

with ``mv`` either None or a ``(ballot, value)`` pair.  Ballots are ints and
None sorts below every ballot.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from ..model import Sts
from ..netsem.core import (Alloc, Check, Configuration, Load, NewSocket, Pure, Receive, Send,
                           SendEv, SetBlocking, SocketAddr, SocketBind, Store, sendto_all,
                           wait_receivefrom)
from ..netsem.sched import Policy
from ..refinement import CoupledResult, TraceRel, run_coupled
from ..traces import FiniteTrace


class SdpState(NamedTuple):
    msgs: FrozenSet[tuple]
    maxbal: Tuple[Optional[int], ...]
    maxval: Tuple[Optional[Tuple[int, str]], ...]


class SdplState(NamedTuple):
    ctr: Tuple[int, ...]
    msgs: FrozenSet[tuple]
    maxbal: Tuple[Optional[int], ...]
    maxval: Tuple[Optional[Tuple[int, str]], ...]

    @property
    def sdp(self) -> SdpState:
        return SdpState(self.msgs, self.maxbal, self.maxval)


def ballot(k: int, p: int, nprops: int) -> int:
    if not 0 <= p < nprops:
        raise ValueError("proposer index out of range")
    return k * nprops + p


def majority(n: int) -> int:
    return n // 2 + 1


def quorums(n: int, q: Optional[int] = None) -> List[FrozenSet[int]]:
    q = majority(n) if q is None else q
    return [frozenset(c) for k in range(q, n + 1) for c in itertools.combinations(range(n), k)]


def sdp_init(n_acc: int) -> SdpState:
    return SdpState(frozenset(), (None,) * n_acc, (None,) * n_acc)


def sdpl_init(n_props: int, n_acc: int) -> SdplState:
    return SdplState((0,) * n_props, frozenset(), (None,) * n_acc, (None,) * n_acc)


def _gt(b: int, mb: Optional[int]) -> bool:
    return mb is None or b > mb


def _ge(b: int, mb: Optional[int]) -> bool:
    return mb is None or b >= mb


# -- ShowsSafeAt and friends -------------------------------------------------

def q1bv(msgs: Iterable[tuple], Q: Iterable[int], b: int) -> set:
    Q = set(Q)
    return {m for m in msgs if m[0] == "1b" and m[2] == b and m[3] is not None and m[1] in Q}


def have_promised(msgs: Iterable[tuple], Q: Iterable[int], b: int) -> bool:
    promised = {m[1] for m in msgs if m[0] == "1b" and m[2] == b}
    return set(Q) <= promised


def is_max_vote(msgs: Iterable[tuple], Q: Iterable[int], b: int, v) -> bool:
    votes = q1bv(msgs, Q, b)
    return any(m[3][1] == v and all(m[3][0] >= m2[3][0] for m2 in votes) for m in votes)


def shows_safe_at(msgs: Iterable[tuple], Q: Iterable[int], b: int, v) -> bool:
    msgs = list(msgs)
    return have_promised(msgs, Q, b) and (not q1bv(msgs, Q, b) or is_max_vote(msgs, Q, b, v))


def _oneb_index(msgs) -> Dict[int, Dict[int, Optional[tuple]]]:
    idx: Dict[int, Dict[int, Optional[tuple]]] = {}
    for m in msgs:
        if m[0] == "1b":
            idx.setdefault(m[2], {})[m[1]] = m[3]
    return idx


def _safe_values(promises: Dict[int, Optional[tuple]], qs: Sequence[FrozenSet[int]],
                 values: Sequence) -> set:
    """Values v for which some quorum in ``qs`` shows v safe, given a's 1b at b."""
    out = set()
    for Q in qs:
        if not all(a in promises for a in Q):
            continue
        votes = [promises[a] for a in Q if promises[a] is not None]
        if not votes:
            return set(values)
        top = max(bb for bb, _ in votes)
        out.update(vv for bb, vv in votes if bb == top)
    return out


def chosen(msgs: Iterable[tuple], v, n_acc: int, q: Optional[int] = None) -> bool:
    q = majority(n_acc) if q is None else q
    votes: Dict[int, set] = {}
    for m in msgs:
        if m[0] == "2b" and m[3] == v:
            votes.setdefault(m[2], set()).add(m[1])
    return any(len(s) >= q for s in votes.values())


def chosen_values(msgs: Iterable[tuple], n_acc: int, q: Optional[int] = None) -> set:
    q = majority(n_acc) if q is None else q
    votes: Dict[Tuple[int, str], set] = {}
    for m in msgs:
        if m[0] == "2b":
            votes.setdefault((m[2], m[3]), set()).add(m[1])
    return {bv[1] for bv, s in votes.items() if len(s) >= q}


def chosen_wire(bodies: Iterable[str], v, n_acc: int, q: Optional[int] = None) -> bool:
    msgs = [m for m in (parse(b) for b in bodies) if m is not None]
    return chosen(msgs, v, n_acc, q)


# -- SDP step checker (the unrestricted model) ---------------------------------

def sdp_is_step(s: SdpState, t: SdpState, q: Optional[int] = None) -> bool:
    """Decide s -> t in SDP.  Ballots and values are unrestricted."""
    n = len(s.maxbal)
    qs = quorums(n, q)
    if not s.msgs <= t.msgs:
        return False
    added = t.msgs - s.msgs
    if not added:
        if t != s:
            return False
        return any(m[0] == "1a" for m in s.msgs) or _revote_exists(s)
    if len(added) != 1:
        return False
    (m,) = added
    kind = m[0]
    if kind == "1a":
        return t.maxbal == s.maxbal and t.maxval == s.maxval
    if kind == "1b":
        _, a, b, mv = m
        return (("1a", b) in s.msgs and _gt(b, s.maxbal[a]) and mv == s.maxval[a]
                and t.maxbal == _put(s.maxbal, a, b) and t.maxval == s.maxval)
    if kind == "2a":
        _, b, v = m
        if any(x[0] == "2a" and x[1] == b for x in s.msgs):
            return False
        if t.maxbal != s.maxbal or t.maxval != s.maxval:
            return False
        return any(shows_safe_at(s.msgs, Q, b, v) for Q in qs)
    if kind == "2b":
        _, a, b, v = m
        return (("2a", b, v) in s.msgs and _ge(b, s.maxbal[a])
                and t.maxbal == _put(s.maxbal, a, b) and t.maxval == _put(s.maxval, a, (b, v)))
    return False


def _revote_exists(s) -> bool:
    """Some acceptor may re-send a 2b it already sent, leaving the state unchanged."""
    return any(m[0] == "2b" and ("2a", m[2], m[3]) in s.msgs and s.maxbal[m[1]] == m[2]
               and s.maxval[m[1]] == (m[2], m[3]) for m in s.msgs)


def _put(tup: tuple, i: int, x) -> tuple:
    return tup[:i] + (x,) + tup[i + 1:]


# -- SDPL ---------------------------------------------------------------------

def sdpl_transitions(s: SdplState, values: Sequence, q: Optional[int] = None,
                     ctr_max: Optional[int] = None, skip_self: bool = False) -> List[Tuple[tuple, SdplState]]:
    """All (label, successor) pairs.  ``ctr_max`` bounds the counters (for
    exploration); ``skip_self`` drops transitions that leave the state unchanged."""
    ctr, msgs, maxbal, maxval = s
    P = len(ctr)
    n = len(maxbal)
    qs = quorums(n, q)
    out: List[Tuple[tuple, SdplState]] = []
    for p in range(P):
        if ctr_max is None or ctr[p] < ctr_max:
            out.append((("inc", p), SdplState(_put(ctr, p, ctr[p] + 1), msgs, maxbal, maxval)))
    for p in range(P):
        b = ctr[p] * P + p
        m = ("1a", b)
        if m in msgs:
            if not skip_self:
                out.append((("1a", b), s))
        else:
            out.append((("1a", b), SdplState(ctr, msgs | {m}, maxbal, maxval)))
    oneas = sorted(m[1] for m in msgs if m[0] == "1a")
    for b in oneas:
        for a in range(n):
            if _gt(b, maxbal[a]):
                m = ("1b", a, b, maxval[a])
                out.append((("1b", a, b), SdplState(ctr, msgs | {m}, _put(maxbal, a, b), maxval)))
    twoa_bals = {m[1] for m in msgs if m[0] == "2a"}
    idx = None
    for p in range(P):
        b = ctr[p] * P + p
        if b in twoa_bals:
            continue
        if idx is None:
            idx = _oneb_index(msgs)
        promises = idx.get(b)
        if not promises:
            continue
        for v in sorted(_safe_values(promises, qs, values), key=repr):
            m = ("2a", b, v)
            out.append((("2a", b, v), SdplState(ctr, msgs | {m}, maxbal, maxval)))
    for m2a in sorted((m for m in msgs if m[0] == "2a"), key=repr):
        _, b, v = m2a
        for a in range(n):
            if _ge(b, maxbal[a]):
                m = ("2b", a, b, v)
                nxt = SdplState(ctr, msgs | {m}, _put(maxbal, a, b), _put(maxval, a, (b, v)))
                if nxt == s and skip_self:
                    continue
                out.append((("2b", a, b, v), nxt))
    return out


def sdpl_successors(s: SdplState, values: Sequence, q: Optional[int] = None,
                    ctr_max: Optional[int] = None) -> List[SdplState]:
    return [t for _, t in sdpl_transitions(s, values, q, ctr_max)]


def sdpl_is_step(s: SdplState, t: SdplState, q: Optional[int] = None,
                 values: Optional[Sequence] = None) -> bool:
    P = len(s.ctr)
    if t.ctr != s.ctr:
        diff = [p for p in range(P) if t.ctr[p] != s.ctr[p]]
        return (len(diff) == 1 and t.ctr[diff[0]] == s.ctr[diff[0]] + 1
                and t.msgs == s.msgs and t.maxbal == s.maxbal and t.maxval == s.maxval)

    def ballot_ok(b: int) -> bool:
        p = b % P
        return b >= 0 and s.ctr[p] * P + p == b

    added = t.msgs - s.msgs
    if not added:
        if t != s:
            return False
        return any(m[0] == "1a" and ballot_ok(m[1]) for m in s.msgs) or _revote_exists(s)
    if len(added) != 1:
        return False
    (m,) = added
    if m[0] in ("1a", "2a"):
        if not ballot_ok(m[1]):
            return False
        if values is not None and m[0] == "2a" and m[2] not in values:
            return False
    return sdp_is_step(s.sdp, t.sdp, q)


def sdpl_sts(n_props: int, n_acc: int, values: Sequence, q: Optional[int] = None,
             ctr_max: Optional[int] = None) -> Sts:
    return Sts(sdpl_init(n_props, n_acc),
               lambda s: sdpl_successors(s, values, q, ctr_max),
               lambda s, t: sdpl_is_step(s, t, q, values) and
               (ctr_max is None or max(t.ctr) <= ctr_max),
               encode=encode, name="sdpl")


def project(s: SdplState) -> SdpState:
    return s.sdp


def sdpl_ballots_coherent(s: SdplState) -> bool:
    """Every 1a/2a ballot is n*|P|+p with n <= ctr(p)."""
    P = len(s.ctr)
    for m in s.msgs:
        if m[0] in ("1a", "2a"):
            b = m[1]
            if b < 0 or b // P > s.ctr[b % P]:
                return False
    return True


def consistent(s, n_acc: int, q: Optional[int] = None) -> bool:
    return len(chosen_values(s.msgs, n_acc, q)) <= 1


def derived_acceptor_state(msgs: Iterable[tuple], n_acc: int):
    """maxBal and maxVal as functions of msgs: the largest ballot an acceptor
    has sent a 1b or 2b for, and its highest-ballot 2b vote."""
    maxbal: List[Optional[int]] = [None] * n_acc
    maxval: List[Optional[Tuple[int, str]]] = [None] * n_acc
    for m in msgs:
        if m[0] in ("1b", "2b"):
            a, b = m[1], m[2]
            if maxbal[a] is None or b > maxbal[a]:
                maxbal[a] = b
            if m[0] == "2b" and (maxval[a] is None or b > maxval[a][0]):
                maxval[a] = (b, m[3])
    return tuple(maxbal), tuple(maxval)


def message_universe(n_props: int, n_acc: int, values: Sequence, ctr_max: int) -> List[tuple]:
    """Every message an SDPL state with counters <= ctr_max can contain."""
    bals = range((ctr_max + 1) * n_props)
    vals = sorted(values, key=repr)
    out: List[tuple] = [("1a", b) for b in bals]
    for a in range(n_acc):
        for b in bals:
            out.append(("1b", a, b, None))
            out.extend(("1b", a, b, (b0, v)) for b0 in range(b) for v in vals)
    out.extend(("2a", b, v) for b in bals for v in vals)
    out.extend(("2b", a, b, v) for a in range(n_acc) for b in bals for v in vals)
    return out


class SdplKeyer:
    """Compact canonical key: counters plus a bitmask over the message
    universe.  Injective on reachable states because maxBal and maxVal are
    determined by msgs (see :func:`derived_acceptor_state`)."""

    def __init__(self, n_props: int, n_acc: int, values: Sequence, ctr_max: int):
        self.index = {m: i for i, m in enumerate(message_universe(n_props, n_acc, values, ctr_max))}
        self.cbits = max(1, ctr_max.bit_length())

    def __call__(self, s: SdplState) -> int:
        idx = self.index
        k = 0
        for m in s.msgs:
            k |= 1 << idx[m]
        for c in s.ctr:
            k = (k << self.cbits) | c
        return k


# -- canonical text -----------------------------------------------------------

def _mtext(m: tuple) -> str:
    if m[0] == "1b":
        return f"1b:{m[1]}:{m[2]}:{_mv(m[3])}"
    return ":".join(str(x) for x in m)


def _mv(mv) -> str:
    return "none" if mv is None else f"{mv[0]},{mv[1]}"


def encode(s) -> str:
    msgs = ";".join(sorted(_mtext(m) for m in s.msgs))
    mb = ",".join("-" if b is None else str(b) for b in s.maxbal)
    mv = ";".join("-" if v is None else f"{v[0]}/{v[1]}" for v in s.maxval)
    if isinstance(s, SdplState):
        return f"ctr={','.join(map(str, s.ctr))}|msgs={msgs}|maxbal={mb}|maxval={mv}"
    return f"msgs={msgs}|maxbal={mb}|maxval={mv}"


def decode(text: str):
    parts = dict(p.split("=", 1) for p in text.split("|"))
    msgs = frozenset(parse(m) for m in parts["msgs"].split(";") if m)
    maxbal = tuple(None if x == "-" else int(x) for x in parts["maxbal"].split(","))
    maxval = tuple(None if x == "-" else (int(x.split("/", 1)[0]), x.split("/", 1)[1])
                   for x in parts["maxval"].split(";"))
    if "ctr" in parts:
        return SdplState(tuple(int(x) for x in parts["ctr"].split(",")), msgs, maxbal, maxval)
    return SdpState(msgs, maxbal, maxval)


# -- wire format -------------------------------------------------------------

def serialize(m: tuple) -> str:
    return _mtext(m)


def parse(body: str) -> Optional[tuple]:
    """Wire body to model message; None if the body is not an SDP message."""
    f = body.split(":")
    try:
        if f[0] == "1a" and len(f) == 2:
            return ("1a", int(f[1]))
        if f[0] == "1b" and len(f) == 4:
            if f[3] == "none":
                mv = None
            else:
                b0, v0 = f[3].split(",", 1)
                mv = (int(b0), v0)
            return ("1b", int(f[1]), int(f[2]), mv)
        if f[0] == "2a" and len(f) == 3:
            return ("2a", int(f[1]), f[2])
        if f[0] == "2b" and len(f) == 4:
            return ("2b", int(f[1]), int(f[2]), f[3])
    except ValueError:
        return None
    return None


def _deser(body: str, kinds: Tuple[str, ...]) -> tuple:
    m = parse(body)
    if m is None or m[0] not in kinds:
        raise ValueError(f"unexpected message {body!r}")
    return m


# -- programs -----------------------------------------------------------------

def find_max_promise(promises: Iterable[Optional[tuple]]) -> Optional[tuple]:
    acc = None
    for promise in promises:
        if promise is not None and acc is not None:
            acc = acc if promise[0] < acc[0] else promise
        elif promise is None and acc is not None:
            pass
        else:
            acc = promise
    return acc


def acceptor(a: int, learners: Sequence[SocketAddr], addr: SocketAddr):
    skt = yield NewSocket()
    yield SocketBind(skt, addr)
    max_bal = yield Alloc(None)
    max_val = yield Alloc(None)
    while True:
        msg = yield Receive(skt)
        m = _deser(msg.body, ("1a", "2a"))
        if m[0] == "1a":
            bal = m[1]
            mb = yield Load(max_bal)
            if mb is None or mb < bal:
                yield Store(max_bal, bal)
                mv = yield Load(max_val)
                yield Send(skt, serialize(("1b", a, bal, mv)), msg.src)
        else:
            _, bal, v = m
            mb = yield Load(max_bal)
            if mb is None or mb <= bal:
                yield Store(max_bal, bal)
                yield Store(max_val, (bal, v))
                yield from sendto_all(skt, learners, serialize(("2b", a, bal, v)))


def recv_promises(skt: int, n: int, bal0: int, poll: Optional[int]):
    """Collect 1b promises for ``bal0`` from ``n`` distinct acceptors.

    With ``poll`` set the socket is non-blocking and the wait gives up
    (returning None) after that many empty receives.
    """
    promises = set()
    senders = set()
    empty = 0
    while len(senders) != n:
        msg = yield Receive(skt)
        if msg is None:
            empty += 1
            if poll is not None and empty >= poll:
                return None
            continue
        m = _deser(msg.body, ("1b",))
        if m[2] == bal0:
            senders.add(msg.src)
            promises.add(m[3])
    return promises


def proposer(p: int, n_props: int, acceptors: Sequence[SocketAddr], addr: SocketAddr, v: str,
             retries: int = 3, poll: Optional[int] = 40):
    skt = yield NewSocket()
    yield SocketBind(skt, addr)
    if poll is not None:
        yield SetBlocking(skt, False, 0.5)
    k = 0
    maj = len(acceptors) // 2 + 1
    for _ in range(retries + 1):
        k += 1
        yield Pure("prepare-ballot", p)
        bal = ballot(k, p, n_props)
        yield from sendto_all(skt, acceptors, serialize(("1a", bal)))
        promises = yield from recv_promises(skt, maj, bal, poll)
        if promises is None:
            continue
        av = find_max_promise(promises)
        val = v if av is None else av[1]
        yield from sendto_all(skt, acceptors, serialize(("2a", bal, val)))
        return (bal, val)
    return None


def learner(acceptors: Sequence[SocketAddr], addr: SocketAddr, client: Optional[SocketAddr]):
    skt = yield NewSocket()
    yield SocketBind(skt, addr)
    maj = len(acceptors) // 2 + 1
    votes: Dict[int, set] = {}
    while True:
        msg = yield Receive(skt)
        _, _, bal, v = _deser(msg.body, ("2b",))
        bal_votes = votes.get(bal, frozenset()) | {msg.src}
        if len(bal_votes) == maj:
            if client is not None:
                yield Send(skt, f"decide:{bal}:{v}", client)
            return (bal, v)
        votes[bal] = bal_votes


def _client_deser(body: str) -> Tuple[int, str]:
    f = body.split(":")
    if len(f) != 3 or f[0] != "decide":
        raise ValueError(f"unexpected report {body!r}")
    return int(f[1]), f[2]


def client(addr: SocketAddr):
    skt = yield NewSocket()
    yield SocketBind(skt, addr)
    m1 = yield Receive(skt)
    _, v1 = _client_deser(m1.body)
    m2 = yield from wait_receivefrom(skt, lambda m: m.src != m1.src)
    _, v2 = _client_deser(m2.body)
    yield Check(v1 == v2, (v1, v2))
    return v1


@dataclass
class Topology:
    proposers: List[SocketAddr]
    acceptors: List[SocketAddr]
    learners: List[SocketAddr]
    client: SocketAddr
    values: List[str]
    proposer_tids: List[int] = field(default_factory=list)
    learner_tids: List[int] = field(default_factory=list)
    client_tid: int = -1


def setup(n_props: int = 2, n_acc: int = 3, n_learners: int = 2, values: Sequence[str] = ("x", "y"),
          retries: int = 3, poll: Optional[int] = 40, seed: int = 0):
    conf = Configuration(coin_seed=seed)
    topo = Topology([SocketAddr(f"p{i}", 80) for i in range(n_props)],
                    [SocketAddr(f"a{i}", 80) for i in range(n_acc)],
                    [SocketAddr(f"l{i}", 80) for i in range(n_learners)],
                    SocketAddr("c0", 80), list(values))
    for i, a in enumerate(topo.acceptors):
        conf.spawn(a.ip, acceptor(i, topo.learners, a), f"acceptor{i}")
    for i, l in enumerate(topo.learners):
        topo.learner_tids.append(conf.spawn(l.ip, learner(topo.acceptors, l, topo.client), f"learner{i}"))
    topo.client_tid = conf.spawn(topo.client.ip, client(topo.client), "client")
    for i, p in enumerate(topo.proposers):
        v = values[i % len(values)]
        topo.proposer_tids.append(conf.spawn(p.ip, proposer(i, n_props, topo.acceptors, p, v,
                                                            retries, poll), f"proposer{i}"))
    return conf, topo


# -- coupling -----------------------------------------------------------------

def _apply(s: SdplState, m: tuple) -> SdplState:
    kind = m[0]
    if kind == "1b":
        return SdplState(s.ctr, s.msgs | {m}, _put(s.maxbal, m[1], m[2]), s.maxval)
    if kind == "2b":
        return SdplState(s.ctr, s.msgs | {m}, _put(s.maxbal, m[1], m[2]),
                         _put(s.maxval, m[1], (m[2], m[3])))
    return SdplState(s.ctr, s.msgs | {m}, s.maxbal, s.maxval)


def make_matcher(suppress: Optional[int] = None):
    """Wire sends of SDP bodies step the model; ``suppress`` drops the n-th
    fresh model step (fault injection)."""
    count = [0]

    def matcher(exec_t, model_t, view):
        s = model_t.last
        eff = view.effect
        if type(eff) is Pure and eff.tag == "prepare-ballot":
            p = eff.info
            return [SdplState(_put(s.ctr, p, s.ctr[p] + 1), s.msgs, s.maxbal, s.maxval)]
        for ev in view.events:
            if type(ev) is SendEv:
                m = parse(ev.msg.body)
                if m is None or m in s.msgs:
                    continue
                count[0] += 1
                if suppress is not None and count[0] == suppress:
                    return [s]
                return [_apply(s, m)]
        return [s]
    return matcher


class XiSdp(TraceRel):
    """The set of SDP messages seen on the wire equals the model's msgs.

    Summary: (wire message set, model msgs it was last compared with).
    """

    name = "xi_sdp"

    def init(self, exec_t, model_t):
        wire = frozenset()
        return self._check(wire, None, exec_t.last, model_t.last)

    def _check(self, wire, seen_msgs, view, s):
        changed = False
        for ev in view.events:
            if type(ev) is SendEv:
                m = parse(ev.msg.body)
                if m is not None and m not in wire:
                    wire = wire | {m}
                    changed = True
        if not changed and s.msgs is seen_msgs:
            return (wire, seen_msgs)
        if wire != s.msgs:
            return None
        return (wire, s.msgs)

    def step(self, summary, exec_t, model_t):
        return self._check(summary[0], summary[1], exec_t.last, model_t.last)


@dataclass
class PaxosOutcome:
    seed: int
    drop_p: float
    result: CoupledResult
    learner_values: List[Optional[tuple]]
    client_value: object
    assertion_failed: bool
    chosen: set

    @property
    def learners_agree(self) -> bool:
        vals = [lv[1] for lv in self.learner_values if lv is not None]
        return len(set(vals)) <= 1

    @property
    def ok(self) -> bool:
        return self.result.ok and self.learners_agree and not self.assertion_failed \
            and len(self.chosen) <= 1


def run(policy: Policy, seed: int, horizon: int = 20_000, n_props: int = 2, n_acc: int = 3,
        n_learners: int = 2, values: Sequence[str] = ("x", "y"), retries: int = 3,
        poll: Optional[int] = 40, drop_p: float = 0.0, suppress: Optional[int] = None,
        rel: Optional[TraceRel] = None, on_step=None) -> PaxosOutcome:
    from ..netsem.core import AssertionFailed
    conf, topo = setup(n_props, n_acc, n_learners, values, retries, poll, seed)
    sts = sdpl_sts(n_props, n_acc, list(values))
    res = run_coupled(conf, sdpl_init(n_props, n_acc), make_matcher(suppress), rel or XiSdp(),
                      policy, horizon, sts=sts, stop_when_quiescent=True,
                      on_step=on_step)
    lv = [conf.halted.get(t) for t in topo.learner_tids]
    cv = conf.halted.get(topo.client_tid)
    return PaxosOutcome(seed, drop_p, res, lv, cv, isinstance(cv, AssertionFailed),
                        chosen_values(res.model.last.msgs, n_acc))
