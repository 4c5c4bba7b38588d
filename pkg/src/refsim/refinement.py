"""Coupled execution: drive a configuration and a model trace in lock-step.

Each accepted step extends the execution trace by one configuration view and
the model trace by one state (possibly the same state again).  A matcher
proposes candidate model states; a candidate must be a valid evolution of
the model trace and keep the trace relation true, otherwise the run stops
with a :class:`RefinementViolation`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, List, Optional

from .model import Sts
from .netsem.core import (AllocEv, ConfView, Configuration, RecvEv, SendEv, StuckThread,
                          ThreadStep)
from .netsem.sched import Policy
from .traces import FiniteTrace

NO_CANDIDATE = "NoCandidate"
RELATION_FAILED = "RelationFailed"
STUCK_THREAD = "StuckThread"


@dataclass
class RefinementViolation:
    index: int
    kind: str
    diagnostic: str
    exec_tail: list = field(default_factory=list)
    model_tail: list = field(default_factory=list)

    def to_json(self, model_encode: Callable[[Any], Any] = repr) -> dict:
        return {"index": self.index, "kind": self.kind, "diagnostic": self.diagnostic,
                "exec_tail": [repr(v) for v in self.exec_tail],
                "model_tail": [model_encode(m) for m in self.model_tail]}


class TraceRel:
    """Incremental trace relation.

    ``init(exec, model)`` and ``step(summary, exec, model)`` return a new
    summary when the relation holds on the given aligned traces and None
    otherwise.  Summaries must be treated as immutable by callers: a failed
    candidate must not corrupt the summary of the accepted prefix.
    """

    name = "rel"

    def init(self, exec_t: FiniteTrace, model_t: FiniteTrace) -> Any:
        raise NotImplementedError

    def step(self, summary: Any, exec_t: FiniteTrace, model_t: FiniteTrace) -> Any:
        raise NotImplementedError

    def holds(self, exec_t: FiniteTrace, model_t: FiniteTrace) -> bool:
        """Non-incremental reading: fold over all aligned prefixes."""
        return check_rel_all_prefixes(self, exec_t, model_t) is True


class PredRel(TraceRel):
    """Adapter for a plain predicate on (exec, model) traces."""

    def __init__(self, pred: Callable[[FiniteTrace, FiniteTrace], bool], name: str = "pred"):
        self.pred = pred
        self.name = name

    def init(self, exec_t, model_t):
        return True if self.pred(exec_t, model_t) else None

    def step(self, summary, exec_t, model_t):
        return True if self.pred(exec_t, model_t) else None


TRIVIAL = PredRel(lambda e, m: True, "true")


class AllRel(TraceRel):
    """Conjunction of relations; the summary is the tuple of parts."""

    def __init__(self, *rels: TraceRel):
        self.rels = rels
        self.name = "&".join(r.name for r in rels)

    def init(self, exec_t, model_t):
        out = []
        for r in self.rels:
            s = r.init(exec_t, model_t)
            if s is None:
                return None
            out.append(s)
        return tuple(out)

    def step(self, summary, exec_t, model_t):
        out = []
        for r, s in zip(self.rels, summary):
            s2 = r.step(s, exec_t, model_t)
            if s2 is None:
                return None
            out.append(s2)
        return tuple(out)


def valid_evolution_default(model_t: FiniteTrace, cand: Any, sts: Sts) -> bool:
    last = model_t.last
    return cand == last or sts.is_step(last, cand)


def check_rel_all_prefixes(rel: TraceRel, exec_t: FiniteTrace, model_t: FiniteTrace):
    """True if ``rel`` holds on every aligned prefix, else the first failing index."""
    if len(exec_t) != len(model_t):
        raise ValueError("exec and model traces must have equal length")
    summary = rel.init(exec_t.prefix(1), model_t.prefix(1))
    if summary is None:
        return 0
    for n in range(2, len(exec_t) + 1):
        summary = rel.step(summary, exec_t.prefix(n), model_t.prefix(n))
        if summary is None:
            return n - 1
    return True


Matcher = Callable[[FiniteTrace, FiniteTrace, ConfView], List[Any]]


def stutter_matcher(exec_t: FiniteTrace, model_t: FiniteTrace, view: ConfView) -> List[Any]:
    return [model_t.last]


@dataclass
class RunStats:
    steps: int = 0
    max_candidates: int = 0
    candidates_total: int = 0
    halted: bool = False
    quiescent: bool = False
    horizon_reached: bool = False
    stopped_early: bool = False


@dataclass
class CoupledResult:
    exec: FiniteTrace
    model: FiniteTrace
    violation: Optional[RefinementViolation]
    stats: RunStats
    conf: Configuration
    summary: Any = None

    @property
    def ok(self) -> bool:
        return self.violation is None


def _tail(t: FiniteTrace, k: int = 5) -> list:
    n = len(t)
    return [t.lookup(i) for i in range(max(0, n - k), n)]


def run_coupled(conf: Configuration, init_model: Any, matcher: Matcher, rel: TraceRel,
                policy: Policy, horizon: int, sts: Optional[Sts] = None,
                valid_evolution: Optional[Callable[[FiniteTrace, Any], bool]] = None,
                system_matcher: Optional[Matcher] = None,
                stop_when_quiescent: bool = False,
                candidate_cap: int = 1000,
                stop_when: Optional[Callable[[Configuration, Any, int], bool]] = None,
                on_step: Optional[Callable[[ConfView, Any], None]] = None) -> CoupledResult:
    """Run ``conf`` for at most ``horizon`` steps coupled to a model trace.

    ``valid_evolution(model_trace, candidate)`` defaults to stutter-or-step
    of ``sts``.  System steps (deliver/drop) consult ``system_matcher``,
    which defaults to stuttering.  The run ends at the horizon, when every
    thread has halted, optionally when the system is quiescent or when
    ``stop_when(conf, model_state, index)`` holds, or at the first violation.
    """
    if valid_evolution is None:
        if sts is None:
            raise ValueError("either sts or valid_evolution is required")
        valid_evolution = lambda m, c: valid_evolution_default(m, c, sts)
    if system_matcher is None:
        system_matcher = stutter_matcher
    stats = RunStats()
    view0 = conf.view(0, None, None, None, None, ())
    exec_t = FiniteTrace.singleton(view0)
    model_t = FiniteTrace.singleton(init_model)
    summary = rel.init(exec_t, model_t)
    if summary is None:
        v = RefinementViolation(0, RELATION_FAILED, f"{rel.name} fails initially", [view0], [init_model])
        return CoupledResult(exec_t, model_t, v, stats, conf)

    for i in range(1, horizon + 1):
        if not conf.live:
            stats.halted = True
            break
        if stop_when_quiescent and conf.quiescent():
            stats.quiescent = True
            break
        if stop_when is not None and stop_when(conf, model_t.last, i - 1):
            stats.stopped_early = True
            break
        label = policy.choose(conf)
        try:
            tid, eff, result, events = conf.step(label)
        except StuckThread as exc:
            v = RefinementViolation(i, STUCK_THREAD, str(exc), _tail(exec_t), _tail(model_t))
            return CoupledResult(exec_t, model_t, v, stats, conf, summary)
        view = conf.view(i, label, tid, eff, result, events)
        exec_next = exec_t.extend(view)
        if type(label) is ThreadStep:
            cands = matcher(exec_next, model_t, view)
        else:
            cands = system_matcher(exec_next, model_t, view)
        if not isinstance(cands, list):
            cands = list(cands)
        nc = len(cands)
        stats.candidates_total += nc
        if nc > stats.max_candidates:
            stats.max_candidates = nc
        if nc > candidate_cap:
            raise RuntimeError(f"matcher returned {nc} candidates (cap {candidate_cap})")
        accepted = False
        any_valid = False
        reason = "matcher returned no candidate"
        for cand in cands:
            if not valid_evolution(model_t, cand):
                reason = f"candidate {cand!r} is not a valid evolution"
                continue
            any_valid = True
            model_next = model_t.extend(cand)
            s2 = rel.step(summary, exec_next, model_next)
            if s2 is None:
                reason = f"{rel.name} fails for candidate {cand!r}"
                continue
            summary = s2
            exec_t, model_t = exec_next, model_next
            accepted = True
            break
        if not accepted:
            kind = RELATION_FAILED if any_valid else NO_CANDIDATE
            v = RefinementViolation(i, kind, reason, _tail(exec_next), _tail(model_t))
            return CoupledResult(exec_t, model_t, v, stats, conf, summary)
        stats.steps = i
        if on_step is not None:
            on_step(view, model_t.last)
    else:
        stats.horizon_reached = True
        if not conf.live:
            stats.halted = True
    return CoupledResult(exec_t, model_t, None, stats, conf, summary)


# -- event ledger self-check ----------------------------------------------

def events_signature_ok(exec_t: FiniteTrace, conf: Configuration) -> bool:
    """Events extracted from the trace equal the configuration's ledgers."""
    allocs, sends, recvs = [], [], []
    for view in exec_t:
        for ev in view.events:
            t = type(ev)
            if t is AllocEv:
                allocs.append((view.index, ev))
            elif t is SendEv:
                sends.append((view.index, ev))
            elif t is RecvEv:
                recvs.append((view.index, ev))
    return (allocs == conf.alloc_events and sends == conf.send_events
            and recvs == conf.recv_events)
