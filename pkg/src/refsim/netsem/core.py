"""Network operational semantics: heaps, sockets, message soup, threads.

Threads are Python generators.  Each ``yield`` hands the simulator one atomic
:class:`Effect`; the simulator applies it and sends the result back into the
generator on the thread's next step.  A generator that returns becomes a
pending ``Halt`` carrying the return value, which takes one more step.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, NamedTuple, Optional, Tuple


class SocketAddr(NamedTuple):
    ip: str
    port: int

    def __str__(self) -> str:
        return f"{self.ip}:{self.port}"


class Loc(NamedTuple):
    ip: str
    n: int

    def __str__(self) -> str:
        return f"{self.ip}#{self.n}"


class Message:
    """An in-flight message; ``id`` is simulator metadata, never compared on the wire."""

    __slots__ = ("id", "src", "dst", "body")

    def __init__(self, id: int, src: SocketAddr, dst: SocketAddr, body: str):
        self.id = id
        self.src = src
        self.dst = dst
        self.body = body

    @property
    def wire(self) -> Tuple[SocketAddr, SocketAddr, str]:
        return (self.src, self.dst, self.body)

    def to_json(self) -> dict:
        return {"id": self.id, "from": str(self.src), "to": str(self.dst), "body": self.body}

    def __repr__(self) -> str:
        return f"Message({self.id}, {self.src}->{self.dst}, {self.body!r})"


class SocketState:
    __slots__ = ("bound", "blocking", "buffer", "timeout")

    def __init__(self):
        self.bound: Optional[SocketAddr] = None
        self.blocking = True
        self.buffer: deque = deque()
        self.timeout: Optional[float] = None


# -- effects ---------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Pure:
    tag: Any = None
    info: Any = None


@dataclass(frozen=True, slots=True)
class Alloc:
    value: Any
    label: Any = None


@dataclass(frozen=True, slots=True)
class Load:
    loc: Loc


@dataclass(frozen=True, slots=True)
class Store:
    loc: Loc
    value: Any


@dataclass(frozen=True, slots=True)
class Cas:
    loc: Loc
    expect: Any
    new: Any
    tag: Any = None


@dataclass(frozen=True, slots=True)
class Fork:
    program: Iterator
    name: str = ""


@dataclass(frozen=True, slots=True)
class NewSocket:
    pass


@dataclass(frozen=True, slots=True)
class SocketBind:
    handle: int
    addr: SocketAddr


@dataclass(frozen=True, slots=True)
class SetBlocking:
    handle: int
    flag: bool
    timeout: Optional[float] = None


@dataclass(frozen=True, slots=True)
class Send:
    handle: int
    body: str
    to: SocketAddr


@dataclass(frozen=True, slots=True)
class Receive:
    handle: int


@dataclass(frozen=True, slots=True)
class Halt:
    value: Any = None


@dataclass(frozen=True, slots=True)
class Coin:
    """Fair coin drawn from the configuration's coin stream; overridable per node."""
    tag: Any = None


@dataclass(frozen=True, slots=True)
class Check:
    """Runtime assertion; a failing check halts the thread with AssertionFailed."""
    ok: bool
    info: Any = None


@dataclass(frozen=True, slots=True)
class _Crash:
    reason: str


class AssertionFailed:
    """Halt value of a thread whose Check effect failed."""

    __slots__ = ("info",)

    def __init__(self, info: Any = None):
        self.info = info

    def __repr__(self) -> str:
        return f"AssertionFailed({self.info!r})"

    def __eq__(self, other):
        return isinstance(other, AssertionFailed) and other.info == self.info

    def __hash__(self):
        return hash(("AssertionFailed", repr(self.info)))


# -- events and labels -----------------------------------------------------

class AllocEv(NamedTuple):
    label: Any
    loc: Loc
    ip: str


class SendEv(NamedTuple):
    msg: Message


class RecvEv(NamedTuple):
    msg: Message
    ip: str


class CheckEv(NamedTuple):
    ok: bool
    tid: int
    info: Any


def _typed_eq(self, other) -> bool:
    return type(self) is type(other) and tuple.__eq__(self, other)


def _typed_hash(self) -> int:
    return hash((type(self).__name__, tuple(self)))


# Labels of different kinds never compare equal, unlike plain named tuples.
class ThreadStep(NamedTuple):
    tid: int
    __eq__ = _typed_eq
    __ne__ = lambda self, other: not _typed_eq(self, other)  # noqa: E731
    __hash__ = _typed_hash


class Deliver(NamedTuple):
    mid: int
    __eq__ = _typed_eq
    __ne__ = lambda self, other: not _typed_eq(self, other)  # noqa: E731
    __hash__ = _typed_hash


class Drop(NamedTuple):
    mid: int
    __eq__ = _typed_eq
    __ne__ = lambda self, other: not _typed_eq(self, other)  # noqa: E731
    __hash__ = _typed_hash


StepLabel = Any  # ThreadStep | Deliver | Drop


def label_to_json(label: StepLabel) -> list:
    if isinstance(label, ThreadStep):
        return ["thread", label.tid]
    if isinstance(label, Deliver):
        return ["deliver", label.mid]
    if isinstance(label, Drop):
        return ["drop", label.mid]
    return ["init"]


def event_to_json(ev) -> dict:
    if isinstance(ev, AllocEv):
        return {"alloc": {"label": ev.label, "loc": str(ev.loc), "ip": ev.ip}}
    if isinstance(ev, SendEv):
        return {"send": ev.msg.to_json()}
    if isinstance(ev, RecvEv):
        return {"recv": ev.msg.to_json(), "ip": ev.ip}
    if isinstance(ev, CheckEv):
        return {"check": ev.ok, "tid": ev.tid, "info": repr(ev.info)}
    raise TypeError(ev)


class StuckThread(Exception):
    def __init__(self, tid: int, reason: str):
        super().__init__(f"thread {tid} stuck: {reason}")
        self.tid = tid
        self.reason = reason


class Thread:
    __slots__ = ("tid", "ip", "gen", "pending", "halted", "result", "name")

    def __init__(self, tid: int, ip: str, gen: Iterator, name: str):
        self.tid = tid
        self.ip = ip
        self.gen = gen
        self.pending: Any = None
        self.halted = False
        self.result: Any = None
        self.name = name


class ConfView:
    """Frozen snapshot of one trace position.

    Heaps are shared with the live configuration until it next writes to
    them, so taking a view is cheap.  Thread-local generator state is not
    captured.
    """

    __slots__ = ("index", "label", "tid", "effect", "result", "events",
                 "heaps", "soup_size", "live", "halted")

    def __init__(self, index, label, tid, effect, result, events, heaps, soup_size, live, halted):
        self.index = index
        self.label = label
        self.tid = tid
        self.effect = effect
        self.result = result
        self.events = events
        self.heaps = heaps
        self.soup_size = soup_size
        self.live = live
        self.halted = halted

    def heap(self, ip: str) -> Dict[Loc, Any]:
        return self.heaps.get(ip, {})

    def __repr__(self) -> str:
        return f"ConfView({self.index}, {self.label}, events={list(self.events)})"


_NO_EVENTS: Tuple = ()
_SELF_STEP = object()


class Configuration:
    """Whole-system state: heaps, sockets, ports, soup and the thread pool.

    ``coin_overrides`` maps a node ip to a bool (every draw) or a list of
    bools consumed in order; other draws come from a ``random.Random``
    seeded with ``coin_seed``.
    """

    def __init__(self, coin_seed: int = 0, coin_overrides: Optional[Dict[str, Any]] = None):
        self.heaps: Dict[str, Dict[Loc, Any]] = {}
        self.sockets: Dict[str, Dict[int, SocketState]] = {}
        self.ports: Dict[str, set] = {}
        self.soup: Dict[int, Message] = {}
        self.bound: Dict[SocketAddr, SocketState] = {}
        self.threads: List[Thread] = []
        self.live: List[int] = []
        self.halted: Dict[int, Any] = {}
        self.next_mid = 0
        self.consumed: List[int] = []
        self.dropped: List[int] = []
        self.sent: List[Message] = []
        self.alloc_events: List[Tuple[int, AllocEv]] = []
        self.send_events: List[Tuple[int, SendEv]] = []
        self.recv_events: List[Tuple[int, RecvEv]] = []
        self.steps = 0
        self._loc_ctr: Dict[str, int] = {}
        self._sock_ctr: Dict[str, int] = {}
        self._shared: set = set()
        self._heaps_view: Optional[dict] = None
        self._halted_view: Optional[dict] = None
        self.coin_rng = random.Random(coin_seed)
        self.coin_overrides = {k: (list(v) if isinstance(v, (list, tuple)) else v)
                               for k, v in (coin_overrides or {}).items()}

    # -- thread pool --

    def spawn(self, ip: str, program: Iterator, name: str = "") -> int:
        """Add a thread running ``program`` on node ``ip``; returns its tid."""
        tid = len(self.threads)
        th = Thread(tid, ip, program, name or f"t{tid}")
        self.threads.append(th)
        self.live.append(tid)
        self.heaps.setdefault(ip, {})
        self.sockets.setdefault(ip, {})
        self.ports.setdefault(ip, set())
        self._advance(th, None, first=True)
        return tid

    def _advance(self, th: Thread, value: Any, first: bool = False) -> None:
        try:
            th.pending = next(th.gen) if first else th.gen.send(value)
        except StopIteration as stop:
            th.pending = Halt(stop.value)
        except Exception as exc:  # program fault: the thread is stuck
            th.pending = _Crash(f"{type(exc).__name__}: {exc}")

    @property
    def all_halted(self) -> bool:
        return not self.live

    def thread(self, tid: int) -> Thread:
        return self.threads[tid]

    # -- enabledness --

    def deliverable(self, msg: Message) -> bool:
        return msg.dst in self.bound

    def is_blocked(self, tid: int) -> bool:
        """True iff the thread's next step is a blocking receive on an empty buffer."""
        th = self.threads[tid]
        eff = th.pending
        if type(eff) is not Receive:
            return False
        sk = self.sockets[th.ip].get(eff.handle)
        return sk is not None and sk.blocking and not sk.buffer

    def quiescent(self) -> bool:
        """No message in flight and every live thread is blocked on an empty buffer."""
        if self.soup:
            return False
        return all(self.is_blocked(t) for t in self.live)

    def enabled_steps(self, allow_drop: bool = True) -> List[StepLabel]:
        out: List[StepLabel] = [ThreadStep(t) for t in self.live]
        bound = self.bound
        for mid, msg in self.soup.items():
            if msg.dst in bound:
                out.append(Deliver(mid))
        if allow_drop:
            out.extend(Drop(mid) for mid in self.soup)
        return out

    # -- steps --

    def step(self, label: StepLabel):
        """Apply one labelled step; returns (tid, effect, result, events)."""
        self.steps += 1
        kind = type(label)
        if kind is ThreadStep:
            return self.step_thread(label.tid)
        if kind is Deliver:
            self.sys_deliver(label.mid)
            return None, None, None, _NO_EVENTS
        if kind is Drop:
            self.sys_drop(label.mid)
            return None, None, None, _NO_EVENTS
        raise ValueError(f"unknown step label {label!r}")

    def step_thread(self, tid: int):
        th = self.threads[tid]
        if th.halted:
            raise StuckThread(tid, "scheduled after halting")
        eff = th.pending
        handler = _HANDLERS.get(type(eff))
        if handler is None:
            raise StuckThread(tid, f"unknown effect {eff!r}")
        result, events = handler(self, th, eff)
        if result is _SELF_STEP:
            return tid, eff, None, _NO_EVENTS
        if not th.halted:
            self._advance(th, result)
        return tid, eff, result, events

    def sys_deliver(self, mid: int) -> None:
        msg = self.soup.get(mid)
        if msg is None:
            raise KeyError(f"message {mid} not in soup")
        sk = self.bound.get(msg.dst)
        if sk is None:
            raise ValueError(f"message {mid} has no bound destination")
        del self.soup[mid]
        sk.buffer.append(msg)

    def sys_drop(self, mid: int) -> None:
        if mid not in self.soup:
            raise KeyError(f"message {mid} not in soup")
        del self.soup[mid]
        self.dropped.append(mid)

    # -- heap helpers --

    def _wheap(self, ip: str) -> Dict[Loc, Any]:
        if ip in self._shared:
            self.heaps[ip] = dict(self.heaps[ip])
            self._shared.discard(ip)
        self._heaps_view = None
        return self.heaps[ip]

    def heaps_view(self) -> dict:
        v = self._heaps_view
        if v is None:
            v = dict(self.heaps)
            self._shared.update(v)
            self._heaps_view = v
        return v

    def halted_view(self) -> dict:
        v = self._halted_view
        if v is None:
            v = dict(self.halted)
            self._halted_view = v
        return v

    def view(self, index: int, label: StepLabel, tid, effect, result, events) -> ConfView:
        return ConfView(index, label, tid, effect, result, events, self.heaps_view(),
                        len(self.soup), len(self.live), self.halted_view())

    def _sock(self, th: Thread, handle: int) -> SocketState:
        sk = self.sockets[th.ip].get(handle)
        if sk is None:
            raise StuckThread(th.tid, f"no socket handle {handle} on {th.ip}")
        return sk

    def _coin(self, ip: str) -> bool:
        ov = self.coin_overrides.get(ip)
        if isinstance(ov, bool):
            return ov
        if ov:
            return bool(ov.pop(0))
        return self.coin_rng.random() < 0.5

    # -- conservation --

    def buffered_ids(self) -> List[int]:
        out = []
        for socks in self.sockets.values():
            for sk in socks.values():
                out.extend(m.id for m in sk.buffer)
        return out

    def conservation_ok(self) -> bool:
        """ever-sent = soup + buffers + consumed + dropped, as multisets of ids."""
        parts = list(self.soup) + self.buffered_ids() + self.consumed + self.dropped
        return sorted(parts) == [m.id for m in self.sent]


# -- effect handlers; each returns (result, events) -------------------------

def _h_pure(c: Configuration, th: Thread, eff: Pure):
    return None, _NO_EVENTS


def _h_alloc(c: Configuration, th: Thread, eff: Alloc):
    n = c._loc_ctr.get(th.ip, 0)
    c._loc_ctr[th.ip] = n + 1
    loc = Loc(th.ip, n)
    c._wheap(th.ip)[loc] = eff.value
    if eff.label is None:
        return loc, _NO_EVENTS
    ev = AllocEv(eff.label, loc, th.ip)
    c.alloc_events.append((c.steps, ev))
    return loc, (ev,)


def _heap_of(c: Configuration, th: Thread, loc: Loc) -> Dict[Loc, Any]:
    if loc.ip != th.ip or loc not in c.heaps[th.ip]:
        raise StuckThread(th.tid, f"access to unallocated location {loc}")
    return c.heaps[th.ip]


def _h_load(c: Configuration, th: Thread, eff: Load):
    return _heap_of(c, th, eff.loc)[eff.loc], _NO_EVENTS


def _h_store(c: Configuration, th: Thread, eff: Store):
    _heap_of(c, th, eff.loc)
    c._wheap(th.ip)[eff.loc] = eff.value
    return None, _NO_EVENTS


def _h_cas(c: Configuration, th: Thread, eff: Cas):
    heap = _heap_of(c, th, eff.loc)
    if heap[eff.loc] == eff.expect:
        c._wheap(th.ip)[eff.loc] = eff.new
        return True, _NO_EVENTS
    return False, _NO_EVENTS


def _h_fork(c: Configuration, th: Thread, eff: Fork):
    return c.spawn(th.ip, eff.program, eff.name), _NO_EVENTS


def _h_socket(c: Configuration, th: Thread, eff: NewSocket):
    h = c._sock_ctr.get(th.ip, 0)
    c._sock_ctr[th.ip] = h + 1
    c.sockets[th.ip][h] = SocketState()
    return h, _NO_EVENTS


def _h_bind(c: Configuration, th: Thread, eff: SocketBind):
    sk = c._sock(th, eff.handle)
    if sk.bound is not None:
        raise StuckThread(th.tid, f"socket {eff.handle} already bound")
    if eff.addr.ip != th.ip:
        raise StuckThread(th.tid, f"bind to foreign address {eff.addr}")
    if eff.addr.port in c.ports[th.ip]:
        raise StuckThread(th.tid, f"port {eff.addr.port} already in use on {th.ip}")
    c.ports[th.ip].add(eff.addr.port)
    sk.bound = eff.addr
    sk.blocking = True
    c.bound[eff.addr] = sk
    return None, _NO_EVENTS


def _h_blocking(c: Configuration, th: Thread, eff: SetBlocking):
    sk = c._sock(th, eff.handle)
    sk.blocking = eff.flag
    sk.timeout = eff.timeout
    return None, _NO_EVENTS


def _h_send(c: Configuration, th: Thread, eff: Send):
    sk = c._sock(th, eff.handle)
    if sk.bound is None:
        raise StuckThread(th.tid, "send on unbound socket")
    msg = Message(c.next_mid, sk.bound, eff.to, eff.body)
    c.next_mid += 1
    c.soup[msg.id] = msg
    c.sent.append(msg)
    ev = SendEv(msg)
    c.send_events.append((c.steps, ev))
    return None, (ev,)


def _h_receive(c: Configuration, th: Thread, eff: Receive):
    sk = c._sock(th, eff.handle)
    if sk.buffer:
        msg = sk.buffer.popleft()
        c.consumed.append(msg.id)
        ev = RecvEv(msg, th.ip)
        c.recv_events.append((c.steps, ev))
        return msg, (ev,)
    if sk.blocking:
        return _SELF_STEP, _NO_EVENTS
    return None, _NO_EVENTS


def _finish(c: Configuration, th: Thread, value: Any) -> None:
    th.halted = True
    th.result = value
    th.pending = None
    c.live.remove(th.tid)
    c.halted[th.tid] = value
    c._halted_view = None


def _h_halt(c: Configuration, th: Thread, eff: Halt):
    gen = th.gen
    _finish(c, th, eff.value)
    try:
        gen.close()
    except Exception:
        pass
    return eff.value, _NO_EVENTS


def _h_coin(c: Configuration, th: Thread, eff: Coin):
    return c._coin(th.ip), _NO_EVENTS


def _h_check(c: Configuration, th: Thread, eff: Check):
    ev = CheckEv(bool(eff.ok), th.tid, eff.info)
    if not eff.ok:
        gen = th.gen
        _finish(c, th, AssertionFailed(eff.info))
        gen.close()
    return bool(eff.ok), (ev,)


def _h_crash(c: Configuration, th: Thread, eff: _Crash):
    raise StuckThread(th.tid, eff.reason)


_HANDLERS = {
    Pure: _h_pure, Alloc: _h_alloc, Load: _h_load, Store: _h_store, Cas: _h_cas,
    Fork: _h_fork, NewSocket: _h_socket, SocketBind: _h_bind, SetBlocking: _h_blocking,
    Send: _h_send, Receive: _h_receive, Halt: _h_halt, Coin: _h_coin, Check: _h_check,
    _Crash: _h_crash,
}


# -- program helpers (sub-generators for ``yield from``) ---------------------

def sendto_all(skt: int, addrs, body: str):
    for a in addrs:
        yield Send(skt, body, a)


def wait_receivefrom(skt: int, test):
    """Receive until ``test(msg)`` holds; returns that message."""
    while True:
        msg = yield Receive(skt)
        if msg is not None and test(msg):
            return msg


def events_of(trace, selector=None) -> list:
    """Events along an exec trace, optionally filtered.

    ``selector`` may be a predicate, or a dict with any of ``kind``
    ("alloc"/"send"/"recv"/"check"), ``label``, ``route`` (src ip, dst ip)
    and ``receiver`` (ip).
    """
    if selector is None:
        pred = None
    elif callable(selector):
        pred = selector
    else:
        pred = _selector_pred(selector)
    out = []
    for view in trace:
        for ev in view.events:
            if pred is None or pred(ev):
                out.append(ev)
    return out


_KINDS = {"alloc": AllocEv, "send": SendEv, "recv": RecvEv, "check": CheckEv}


def _selector_pred(sel: dict):
    kind = _KINDS.get(sel["kind"]) if "kind" in sel else None
    label = sel.get("label", None)
    has_label = "label" in sel
    route = sel.get("route")
    receiver = sel.get("receiver")

    def pred(ev) -> bool:
        if kind is not None and type(ev) is not kind:
            return False
        if has_label and not (type(ev) is AllocEv and ev.label == label):
            return False
        if route is not None:
            if type(ev) not in (SendEv, RecvEv):
                return False
            if (ev.msg.src.ip, ev.msg.dst.ip) != tuple(route):
                return False
        if receiver is not None and not (type(ev) is RecvEv and ev.ip == receiver):
            return False
        return True
    return pred
