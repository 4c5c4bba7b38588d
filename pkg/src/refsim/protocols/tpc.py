"""Two-phase commit: the TC model, TM/RM programs and their coupling."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..model import Sts
from ..netsem.core import (Coin, Configuration, NewSocket, Receive, Send, SendEv, SocketAddr,
                           SocketBind, sendto_all, wait_receivefrom)
from ..netsem.sched import Policy
from ..refinement import AllRel, CoupledResult, TraceRel, run_coupled

WORKING, PREPARED, COMMITTED, ABORTED = "W", "P", "C", "A"
STATUS_NAMES = {WORKING: "Working", PREPARED: "Prepared", COMMITTED: "Committed", ABORTED: "Aborted"}
WIRE = ("PREPARE", "PREPARED", "COMMIT", "COMMITTED", "ABORT", "ABORTED")
REPLY_STATUS = {"PREPARED": PREPARED, "COMMITTED": COMMITTED, "ABORTED": ABORTED}

TcState = Tuple[str, ...]


# -- model ------------------------------------------------------------------

def tc_init(n: int) -> TcState:
    return (WORKING,) * n


def can_commit(d: TcState) -> bool:
    return all(s in (PREPARED, COMMITTED) for s in d)


def not_committed(d: TcState) -> bool:
    return all(s != COMMITTED for s in d)


def _set(d: TcState, r: int, s: str) -> TcState:
    return d[:r] + (s,) + d[r + 1:]


def tc_successors(d: TcState, commit_rule: bool = True, commit_guard: bool = True) -> List[TcState]:
    """One-rule successors; the keyword switches exist for fault injection."""
    out = []
    cc = can_commit(d) or not commit_guard
    nc = not_committed(d)
    for r, s in enumerate(d):
        if s == WORKING:
            out.append(_set(d, r, PREPARED))
        if s == PREPARED and cc and commit_rule:
            out.append(_set(d, r, COMMITTED))
        if s in (WORKING, PREPARED) and nc:
            out.append(_set(d, r, ABORTED))
    return out


def tc_is_step(d: TcState, e: TcState) -> bool:
    if len(d) != len(e):
        return False
    diff = [r for r in range(len(d)) if d[r] != e[r]]
    if len(diff) != 1:
        return False
    r = diff[0]
    a, b = d[r], e[r]
    if a == WORKING and b == PREPARED:
        return True
    if a == PREPARED and b == COMMITTED:
        return can_commit(d)
    if a in (WORKING, PREPARED) and b == ABORTED:
        return not_committed(d)
    return False


def tc_sts(n: int, **fault) -> Sts:
    if fault:
        return Sts(tc_init(n), lambda d: tc_successors(d, **fault), encode=encode, name="tc-faulty")
    return Sts(tc_init(n), tc_successors, tc_is_step, encode=encode, name="tc")


def tc_agreement(d: TcState) -> bool:
    return not (COMMITTED in d and ABORTED in d)


def wire_agreement(committed: Sequence[int], aborted: Sequence[int]) -> bool:
    """No COMMITTED and ABORTED sent by two distinct RMs."""
    return not any(r1 != r2 for r1 in committed for r2 in aborted)


def encode(d: TcState) -> str:
    return "".join(d)


def decode(s: str) -> TcState:
    return tuple(s)


# -- programs ---------------------------------------------------------------

class Nodup:
    """Receive wrapper that filters out (sender, body) pairs already seen."""

    def __init__(self, skt: int):
        self.skt = skt
        self.seen = set()

    def recv(self):
        while True:
            msg = yield Receive(self.skt)
            key = (msg.src, msg.body)
            if key not in self.seen:
                self.seen.add(key)
                return msg


def _check_wire(body: str) -> str:
    if body not in WIRE:
        raise ValueError(f"malformed TPC body {body!r}")
    return body


def recv_resps(recv: Nodup, rms: Sequence[SocketAddr]):
    prepared = set()
    want = set(rms)
    while prepared != want:
        msg = yield from recv.recv()
        if _check_wire(msg.body) != "PREPARED":
            return False
        prepared.add(msg.src)
    return True


def receivefrom_all(recv: Nodup, rms: Sequence[SocketAddr]):
    got = {}
    want = set(rms)
    while set(got) != want:
        msg = yield from recv.recv()
        if msg.src in want:
            got[msg.src] = _check_wire(msg.body)
    return [got[a] for a in rms]


def transaction_manager(tm: SocketAddr, rms: Sequence[SocketAddr]):
    skt = yield NewSocket()
    yield SocketBind(skt, tm)
    recv = Nodup(skt)
    yield from sendto_all(skt, rms, "PREPARE")
    ready = yield from recv_resps(recv, rms)
    if ready:
        yield from sendto_all(skt, rms, "COMMIT")
        yield from receivefrom_all(recv, rms)
        return "COMMITTED"
    yield from sendto_all(skt, rms, "ABORT")
    return "ABORTED"


def resource_manager(rm: SocketAddr, tm: SocketAddr):
    skt = yield NewSocket()
    yield SocketBind(skt, rm)
    msg = yield Receive(skt)
    if _check_wire(msg.body) == "ABORT":
        yield Send(skt, "ABORTED", tm)
        return "ABORTED"
    local_abort = yield Coin("local_abort")
    if local_abort:
        yield Send(skt, "ABORTED", tm)
        return "ABORTED"
    yield Send(skt, "PREPARED", tm)
    decision = yield from wait_receivefrom(skt, lambda m: m.body in ("COMMIT", "ABORT"))
    if decision.body == "COMMIT":
        yield Send(skt, "COMMITTED", tm)
        return "COMMITTED"
    yield Send(skt, "ABORTED", tm)
    return "ABORTED"


@dataclass
class Topology:
    tm: SocketAddr
    rms: List[SocketAddr]
    tm_tid: int = 0
    rm_tids: List[int] = field(default_factory=list)

    def rm_index(self, addr: SocketAddr) -> Optional[int]:
        try:
            return self.rms.index(addr)
        except ValueError:
            return None


def coin_overrides(n: int, coins) -> Dict[str, object]:
    """``coins`` is "random", "commit", "abort", or a map rm-index -> bool/list."""
    if coins in (None, "random"):
        return {}
    if coins == "commit":
        return {f"rm{i}": False for i in range(n)}
    if coins == "abort":
        return {f"rm{i}": True for i in range(n)}
    if isinstance(coins, dict):
        return {f"rm{int(k)}": v for k, v in coins.items()}
    raise ValueError(f"bad coins setting {coins!r}")


def setup(n_rms: int, seed: int = 0, coins="random") -> Tuple[Configuration, Topology]:
    conf = Configuration(coin_seed=seed, coin_overrides=coin_overrides(n_rms, coins))
    topo = Topology(SocketAddr("tm", 80), [SocketAddr(f"rm{i}", 80) for i in range(n_rms)])
    topo.tm_tid = conf.spawn("tm", transaction_manager(topo.tm, topo.rms), "tm")
    for i, a in enumerate(topo.rms):
        topo.rm_tids.append(conf.spawn(a.ip, resource_manager(a, topo.tm), f"rm{i}"))
    return conf, topo


# -- coupling ---------------------------------------------------------------

def make_matcher(topo: Topology, forbid_commit: bool = False):
    def matcher(exec_t, model_t, view):
        d = model_t.last
        for ev in view.events:
            if type(ev) is SendEv and ev.msg.dst == topo.tm:
                st = REPLY_STATUS.get(ev.msg.body)
                r = topo.rm_index(ev.msg.src)
                if st is None or r is None:
                    continue
                if forbid_commit and st == COMMITTED:
                    return []
                return [_set(d, r, st)]
        return [d]
    return matcher


class TcRel(TraceRel):
    """Model state of each RM equals the state implied by its last reply on
    the wire, and agreement holds in both model and wire form.

    Summary: (implied states, committed senders, aborted senders).
    """

    name = "tc_rel"

    def __init__(self, topo: Topology):
        self.topo = topo

    def _scan(self, summary, view, model):
        implied, com, abo = summary
        for ev in view.events:
            if type(ev) is SendEv and ev.msg.dst == self.topo.tm:
                st = REPLY_STATUS.get(ev.msg.body)
                r = self.topo.rm_index(ev.msg.src)
                if st is None or r is None:
                    continue
                implied = _set(implied, r, st)
                if st == COMMITTED:
                    com = com | {r}
                elif st == ABORTED:
                    abo = abo | {r}
        if model != implied or not tc_agreement(model) or not wire_agreement(com, abo):
            return None
        return implied, com, abo

    def init(self, exec_t, model_t):
        n = len(self.topo.rms)
        return self._scan((tc_init(n), frozenset(), frozenset()), exec_t.last, model_t.last)

    def step(self, summary, exec_t, model_t):
        return self._scan(summary, exec_t.last, model_t.last)


@dataclass
class TpcOutcome:
    seed: int
    result: CoupledResult
    tm_result: Optional[str]
    terminated: bool

    @property
    def ok(self) -> bool:
        return self.result.ok


def run(n_rms: int, policy: Policy, seed: int, horizon: int = 10_000, coins="random",
        forbid_commit: bool = False, rel: Optional[TraceRel] = None, on_step=None) -> TpcOutcome:
    conf, topo = setup(n_rms, seed, coins)
    res = run_coupled(conf, tc_init(n_rms), make_matcher(topo, forbid_commit),
                      rel or TcRel(topo), policy, horizon, sts=tc_sts(n_rms),
                      stop_when_quiescent=True, on_step=on_step)
    tm_res = conf.halted.get(topo.tm_tid)
    return TpcOutcome(seed, res, tm_res, not conf.live)
