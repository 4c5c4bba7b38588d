"""Abstract models: state transition systems, fairness models and LiveModel.

``LiveModel(F)`` decorates each state of a fairness model ``F`` with a fuel
per enabled role and an owning thread id per enabled role.  Silent steps of
a thread burn fuel of every role it owns; a role step moves ``F`` and may
refuel the acting role.  Running out of fuel leaves no successor, which is
how unbounded stuttering gets ruled out.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import (Any, Callable, Dict, FrozenSet, Generic, Hashable, Iterable, List,
                    NamedTuple, Optional, Sequence, Tuple, TypeVar)

from .traces import FiniteTrace

S = TypeVar("S")
R = TypeVar("R")


@dataclass
class Sts(Generic[S]):
    """Finitary STS.  ``is_step`` defaults to membership in ``successors``."""

    init: S
    successors: Callable[[S], List[S]]
    step_check: Optional[Callable[[S, S], bool]] = None
    encode: Callable[[S], str] = repr
    name: str = "sts"

    def is_step(self, s: S, t: S) -> bool:
        if self.step_check is not None:
            return self.step_check(s, t)
        return t in self.successors(s)


@dataclass
class FairnessModel(Generic[S, R]):
    init: S
    roles: FrozenSet[R]
    enabled: Callable[[S], FrozenSet[R]]
    step: Callable[[S, R], List[S]]
    fuel_limit: Callable[[S], int]
    name: str = "F"

    def transitions(self, s: S) -> List[Tuple[R, S]]:
        return [(r, t) for r in sorted(self.enabled(s), key=repr) for t in self.step(s, r)]


# -- LiveModel -------------------------------------------------------------

class Silent(NamedTuple):
    tid: int


class Step(NamedTuple):
    role: Any
    tid: int


LiveLabel = Any  # Step | Silent


@dataclass(frozen=True)
class LiveState(Generic[S, R]):
    under: Any
    fuels: Tuple[Tuple[Any, int], ...]
    mapping: Tuple[Tuple[Any, int], ...]

    @staticmethod
    def make(under, fuels: Dict[Any, int], mapping: Dict[Any, int]) -> "LiveState":
        return LiveState(under, tuple(sorted(fuels.items(), key=lambda kv: repr(kv[0]))),
                         tuple(sorted(mapping.items(), key=lambda kv: repr(kv[0]))))

    @property
    def fuel(self) -> Dict[Any, int]:
        return dict(self.fuels)

    @property
    def owner(self) -> Dict[Any, int]:
        return dict(self.mapping)

    def roles_of(self, tid: int) -> List[Any]:
        return [r for r, t in self.mapping if t == tid]

    def min_fuel(self) -> Optional[int]:
        return min((f for _, f in self.fuels), default=None)


def live_init(F: FairnessModel, tid: int = 0, f_init: Optional[int] = None) -> LiveState:
    en = F.enabled(F.init)
    f = F.fuel_limit(F.init) if f_init is None else f_init
    return LiveState.make(F.init, {r: f for r in en}, {r: tid for r in en})


def live_is_step(F: FairnessModel, ls: LiveState, lbl: LiveLabel, nxt: LiveState) -> bool:
    """Decide whether ``nxt`` is a LiveModel successor of ``ls`` under ``lbl``."""
    fu, mp = ls.fuel, ls.owner
    fu2, mp2 = nxt.fuel, nxt.owner
    if isinstance(lbl, Silent):
        tid = lbl.tid
        mine = [r for r, t in mp.items() if t == tid]
        if not mine or nxt.under != ls.under:
            return False
        if set(fu2) != set(fu) or set(mp2) != set(fu2):
            return False
        for r in fu:
            if r in mine or mp2[r] != mp[r]:
                if not fu2[r] < fu[r]:
                    return False
            elif fu2[r] > fu[r]:
                return False
        return all(f >= 0 for f in fu2.values())
    if isinstance(lbl, Step):
        rho, tid = lbl.role, lbl.tid
        en = F.enabled(ls.under)
        if mp.get(rho) != tid or rho not in en:
            return False
        if nxt.under not in F.step(ls.under, rho):
            return False
        en2 = F.enabled(nxt.under)
        if set(fu2) != set(en2) or set(mp2) != set(en2):
            return False
        lim = F.fuel_limit(nxt.under)
        for r in en2:
            f2 = fu2[r]
            if f2 < 0:
                return False
            if r not in en:
                if f2 > lim:
                    return False
                continue
            if r == rho:
                if f2 > lim:
                    return False
                continue
            if mp[r] == tid or mp2[r] != mp[r]:
                if not f2 < fu[r]:
                    return False
            elif f2 > fu[r]:
                return False
        return True
    return False


def live_successors(F: FairnessModel, ls: LiveState, lbl: LiveLabel,
                    tids: Optional[Sequence[int]] = None) -> List[LiveState]:
    """All LiveModel successors of ``ls`` under ``lbl`` (finite by construction).

    Owners range over ``tids`` (default: the tids currently owning a role).
    """
    fu, mp = ls.fuel, ls.owner
    pool = sorted(set(tids) if tids is not None else set(mp.values()))
    out: List[LiveState] = []
    if isinstance(lbl, Silent):
        tid = lbl.tid
        if not any(t == tid for t in mp.values()):
            return []
        roles = sorted(fu, key=repr)
        per_role = []
        for r in roles:
            opts = []
            for owner in pool:
                strict = mp[r] == tid or owner != mp[r]
                top = fu[r] - 1 if strict else fu[r]
                opts.extend((f, owner) for f in range(top, -1, -1))
            per_role.append(opts)
        for combo in itertools.product(*per_role):
            out.append(LiveState.make(ls.under, {r: c[0] for r, c in zip(roles, combo)},
                                      {r: c[1] for r, c in zip(roles, combo)}))
        return out
    if isinstance(lbl, Step):
        rho, tid = lbl.role, lbl.tid
        en = F.enabled(ls.under)
        if mp.get(rho) != tid or rho not in en:
            return []
        for u2 in F.step(ls.under, rho):
            en2 = F.enabled(u2)
            lim = F.fuel_limit(u2)
            roles = sorted(en2, key=repr)
            per_role = []
            for r in roles:
                opts = []
                if r not in en:
                    opts = [(f, o) for o in pool for f in range(lim, -1, -1)]
                elif r == rho:
                    opts = [(f, mp[r]) for f in range(lim, -1, -1)]
                else:
                    for owner in pool:
                        strict = mp[r] == tid or owner != mp[r]
                        top = fu[r] - 1 if strict else fu[r]
                        opts.extend((f, owner) for f in range(top, -1, -1))
                per_role.append(opts)
            for combo in itertools.product(*per_role):
                out.append(LiveState.make(u2, {r: c[0] for r, c in zip(roles, combo)},
                                          {r: c[1] for r, c in zip(roles, combo)}))
        return out
    return []


def live_labels(ls: LiveState) -> List[LiveLabel]:
    tids = sorted(set(t for _, t in ls.mapping))
    return [Silent(t) for t in tids] + [Step(r, t) for r, t in ls.mapping]


def lift(F: FairnessModel, tids: Optional[Sequence[int]] = None, tid0: int = 0,
         f_init: Optional[int] = None) -> Sts:
    """LiveModel(F) as an STS over (LiveState, incoming label) pairs."""
    init = (live_init(F, tid0, f_init), None)

    def successors(st):
        ls, _ = st
        return [(n, lbl) for lbl in live_labels(ls) for n in live_successors(F, ls, lbl, tids)]

    def check(st, nxt):
        (ls, _), (ls2, lbl) = st, nxt
        return lbl is not None and live_is_step(F, ls, lbl, ls2)

    return Sts(init, successors, check, name=f"Live({F.name})")


def destutter(t: FiniteTrace, F: Optional[FairnessModel] = None) -> FiniteTrace:
    """Project a LiveModel trace of (LiveState, label) pairs onto F.

    Result elements are ``(state, role)`` pairs where ``role`` labels the
    transition entering ``state`` (None for the first).  With ``F`` given the
    input is validated first and a ValueError raised if it is not a valid
    LiveModel trace.
    """
    items = list(t)
    if F is not None:
        for (ls, _), (ls2, lbl) in zip(items, items[1:]):
            if lbl is None or not live_is_step(F, ls, lbl, ls2):
                raise ValueError(f"invalid LiveModel step {lbl!r}")
    out = FiniteTrace.singleton((items[0][0].under, None))
    for ls, lbl in items[1:]:
        if isinstance(lbl, Step):
            out = out.extend((ls.under, lbl.role))
    return out


def valid_f_trace(F: FairnessModel, t: FiniteTrace) -> bool:
    items = list(t)
    for (s, _), (s2, role) in zip(items, items[1:]):
        if role not in F.enabled(s) or s2 not in F.step(s, role):
            return False
    return True


# -- locally fairly terminating --------------------------------------------

class ComparatorError(Exception):
    pass


@dataclass
class WfOrder:
    """A partial order given by ``leq`` plus a rank into tuples of naturals.

    ``rank`` must strictly decrease (lexicographically) along every strict
    descent of ``leq``; that is what makes the order checkably well founded.
    """

    leq: Callable[[Any, Any], bool]
    rank: Callable[[Any], Tuple[int, ...]]

    def lt(self, a, b) -> bool:
        return self.leq(a, b) and a != b


@dataclass
class CriterionResult:
    ok: bool
    checked_transitions: int
    states: int
    failure: Optional[dict] = None


def check_locally_fair_terminating(F: FairnessModel, order: WfOrder,
                                   progress: Callable[[Any], Any],
                                   states: Iterable[Any]) -> CriterionResult:
    states = list(states)
    ntr = 0

    def lt(a, b):
        if order.leq(a, b) and order.leq(b, a) and a != b:
            raise ComparatorError(f"order is not antisymmetric on {a!r}, {b!r}")
        strict = order.lt(a, b)
        if strict:
            ra, rb = order.rank(a), order.rank(b)
            if any(x < 0 for x in ra) or not ra < rb:
                raise ComparatorError(f"rank does not descend from {b!r} to {a!r}")
        return strict

    for s in states:
        trs = F.transitions(s)
        p = progress(s)
        if trs and p not in F.enabled(s):
            return CriterionResult(False, ntr, len(states),
                                   {"condition": 2, "from": s, "role": p, "to": None})
        for role, s2 in trs:
            ntr += 1
            if not (s2 == s or lt(s2, s)):
                return CriterionResult(False, ntr, len(states),
                                       {"condition": 1, "from": s, "role": role, "to": s2})
            if role == p:
                if not lt(s2, s):
                    return CriterionResult(False, ntr, len(states),
                                           {"condition": 2, "from": s, "role": role, "to": s2})
            elif progress(s2) != p:
                return CriterionResult(False, ntr, len(states),
                                       {"condition": 3, "from": s, "role": role, "to": s2})
    return CriterionResult(True, ntr, len(states))
