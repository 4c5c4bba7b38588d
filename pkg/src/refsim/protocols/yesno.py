"""Yes/No fair termination: the F_yn fairness model, the two flipping threads
and their coupling to LiveModel(F_yn).

States are ``(m, b, ye, ne)``.  ``m`` is the No thread's counter, ``b`` the
shared flag, and ``ye``/``ne`` say whether the Yes/No roles are still alive.
Starting from ``b = 1`` the Yes counter equals ``m + b - 1`` throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

from ..model import (CriterionResult, FairnessModel, LiveState, Silent, Step, WfOrder,
                     check_locally_fair_terminating, destutter, live_init, lift, valid_f_trace)
from ..netsem.core import Alloc, AllocEv, Cas, Configuration, Fork, Halt, Load, Store
from ..netsem.sched import Policy
from ..refinement import CoupledResult, TraceRel, run_coupled
from ..traces import FiniteTrace

YES, NO = "Yes", "No"
ROLES = frozenset({YES, NO})
FUEL_LIMIT = 30
F_INIT = 30

FynState = Tuple[int, int, int, int]


# -- model ------------------------------------------------------------------

def fyn_init(k: int) -> FynState:
    return (k, 1, 1, 1)


def fyn_enabled(s: FynState) -> frozenset:
    _, _, ye, ne = s
    return frozenset(r for r, on in ((YES, ye), (NO, ne)) if on)


def fyn_step(s: FynState, role: str) -> List[FynState]:
    """Transitions 1-7; the last No step after Yes is gone is labelled No."""
    m, b, ye, ne = s
    out: List[FynState] = []
    if role == YES and ye:
        if ne and m > 0 and b == 1:
            out.append((m, 0, 1, 1))          # 1: success
        if ne and m > 0 and b == 0:
            out.append((m, 0, 1, 1))          # 2: failure
        if m <= 1:
            out.append((m, b, 0, ne))         # 6: Yes terminates
    if role == NO and ne:
        if ye and m > 0 and b == 0:
            out.append((m - 1, 1, 1, 1))      # 3: success
        if ye and b == 1:
            out.append((m, 1, 1, 1))          # 4: failure
        if s == (1, 0, 0, 1):
            out.append((0, 1, 0, 1))          # 5: last No step
        if m == 0:
            out.append((0, b, ye, 0))         # 7: No terminates
    return out


def fyn_model(k: int = 5, fuel_limit: int = FUEL_LIMIT) -> FairnessModel:
    return FairnessModel(fyn_init(k), ROLES, fyn_enabled, fyn_step,
                         lambda s: fuel_limit, name="F_yn")


def all_states(m_max: int) -> List[FynState]:
    return [(m, b, ye, ne) for m in range(m_max + 1) for b in (0, 1)
            for ye in (0, 1) for ne in (0, 1)]


def reachable_states(k: int) -> List[FynState]:
    F = fyn_model(k)
    seen = {F.init}
    todo = [F.init]
    while todo:
        s = todo.pop()
        for _, t in F.transitions(s):
            if t not in seen:
                seen.add(t)
                todo.append(t)
    return sorted(seen)


def fyn_leq(a: FynState, b: FynState) -> bool:
    """Product order of (m, b) lexicographic, ye and ne."""
    return a[:2] <= b[:2] and a[2] <= b[2] and a[3] <= b[3]


def fyn_rank(s: FynState) -> Tuple[int, int]:
    return (2 * s[0] + s[1], s[2] + s[3])


FYN_ORDER = WfOrder(fyn_leq, fyn_rank)


def progress(s: FynState) -> str:
    """The flag picks the role that can move, unless one role is gone."""
    _, b, ye, ne = s
    if not ye:
        return NO
    if not ne:
        return YES
    return YES if b == 1 else NO


def progress_by_flag(s: FynState) -> str:
    return YES if s[1] == 1 else NO


def check_criterion(m_max: int = 10, progress_map=progress) -> CriterionResult:
    """Run the locally-fair-termination check on every state with m <= m_max."""
    F = fyn_model(m_max)
    return check_locally_fair_terminating(F, FYN_ORDER, progress_map, all_states(m_max))


# -- programs ---------------------------------------------------------------

def yes(b, n):
    while True:
        if (yield Cas(b, 1, 0, YES)):
            v = yield Load(n)
            yield Store(n, v - 1)
        if (yield Load(n)) <= 0:
            return "yes-done"


def no(b, m):
    while True:
        if (yield Cas(b, 0, 1, NO)):
            v = yield Load(m)
            yield Store(m, v - 1)
        if (yield Load(m)) <= 0:
            return "no-done"


def start(k: int):
    b = yield Alloc(1, "b")
    n = yield Alloc(k, "n")
    m = yield Alloc(k, "m")
    yield Fork(yes(b, n), "yes")
    return (yield from no(b, m))


IP = "n0"
MAIN_TID, YES_TID = 0, 1


def setup(k: int) -> Configuration:
    if k < 1:
        raise ValueError("k must be at least 1")
    conf = Configuration()
    conf.spawn(IP, start(k), "main")
    return conf


# -- coupling ---------------------------------------------------------------

def _role_target(s: FynState, role: str, eff, result) -> FynState:
    m, b, ye, ne = s
    if type(eff) is Halt:
        return (m, b, 0, ne) if role == YES else (m, b, ye, 0)
    if not result:
        return s
    if role == YES:
        return (m, 0, ye, ne)
    return (m - 1, 1, ye, ne)


def make_matcher(F: FairnessModel):
    """Cas and final halt steps are role steps; everything else is silent.

    Acting roles refuel to the fuel limit; silent steps burn one unit of
    every role the thread owns.  A candidate with negative fuel is still
    returned so that an underflow shows up as a rejected step.
    """
    def matcher(exec_t, model_t, view):
        ls, _ = model_t.last
        tid, eff = view.tid, view.effect
        if tid is None:
            return [model_t.last]
        fu, mp = ls.fuel, ls.owner
        role = None
        if type(eff) is Cas:
            role = eff.tag
        elif type(eff) is Halt:
            roles = ls.roles_of(tid)
            role = roles[0] if len(roles) == 1 else None
        if role is None:
            fu2 = {r: (f - 1 if mp[r] == tid else f) for r, f in fu.items()}
            mp2 = dict(mp)
            if type(eff) is Fork:
                mp2[YES] = view.result
            return [(LiveState.make(ls.under, fu2, mp2), Silent(tid))]
        u2 = _role_target(ls.under, role, eff, view.result)
        en2 = F.enabled(u2)
        lim = F.fuel_limit(u2)
        fu2, mp2 = {}, {}
        for r in en2:
            if r == role or r not in fu:
                fu2[r] = lim
                mp2[r] = mp.get(r, tid)
            else:
                fu2[r] = fu[r] - 1 if mp[r] == tid else fu[r]
                mp2[r] = mp[r]
        return [(LiveState.make(u2, fu2, mp2), Step(role, tid))]
    return matcher


class XiYn(TraceRel):
    """Heap agrees with the model.

    ``b`` equals the model flag; ``m`` equals the model counter and the Yes
    counter equals ``m + b - 1``, each up to a decrement already decided by
    a successful cas but not yet stored; ``ye`` is 0 exactly when the Yes
    thread has halted.  Summary: (locs, pending Yes, pending No).
    """

    name = "xi_yn"

    def _scan(self, summary, view, ls):
        locs, py, pn = summary
        for ev in view.events:
            if type(ev) is AllocEv:
                locs = {**locs, ev.label: ev.loc}
        eff = view.effect
        if type(eff) is Cas and view.result:
            if eff.tag == YES:
                py = 1
            else:
                pn = 1
        elif type(eff) is Store:
            if eff.loc == locs.get("n"):
                py = 0
            elif eff.loc == locs.get("m"):
                pn = 0
        m, b, ye, _ = ls.under
        heap = view.heap(IP)
        if "b" in locs and heap[locs["b"]] != b:
            return None
        if "m" in locs and heap[locs["m"]] != m + pn:
            return None
        if "n" in locs and heap[locs["n"]] != m + b - 1 + py:
            return None
        if (YES_TID in view.halted) != (ye == 0):
            return None
        return locs, py, pn

    def init(self, exec_t, model_t):
        return self._scan(({}, 0, 0), exec_t.last, model_t.last[0])

    def step(self, summary, exec_t, model_t):
        return self._scan(summary, exec_t.last, model_t.last[0])


@dataclass
class YesNoOutcome:
    seed: int
    result: CoupledResult
    terminated: bool
    final: FynState
    min_fuel: Optional[int]
    destuttered: FiniteTrace
    valid_destutter: bool

    @property
    def underflow(self) -> bool:
        v = self.result.violation
        return v is not None and "fuel" in v.diagnostic

    @property
    def ok(self) -> bool:
        return self.result.ok and self.terminated and self.valid_destutter


def min_fuel_along(model: Iterable) -> Optional[int]:
    vals = [ls.min_fuel() for ls, _ in model]
    vals = [v for v in vals if v is not None]
    return min(vals) if vals else None


def run(k: int, policy: Policy, seed: int = 0, horizon: int = 10_000,
        f_init: int = F_INIT, fuel_limit: int = FUEL_LIMIT,
        rel: Optional[TraceRel] = None, on_step=None) -> YesNoOutcome:
    F = fyn_model(k, fuel_limit)
    sts = lift(F, tids=(MAIN_TID, YES_TID), tid0=MAIN_TID, f_init=f_init)
    conf = setup(k)

    def valid(model_t, cand):
        return sts.is_step(model_t.last, cand)

    res = run_coupled(conf, (live_init(F, MAIN_TID, f_init), None), make_matcher(F),
                      rel or XiYn(), policy, horizon, valid_evolution=valid,
                      on_step=on_step)
    if res.violation is not None and res.violation.kind == "NoCandidate":
        ls = res.violation.model_tail[-1][0] if res.violation.model_tail else None
        if ls is not None and ls.min_fuel() == 0:
            res.violation.diagnostic = f"fuel underflow: {res.violation.diagnostic}"
    dt = destutter(res.model, F)
    return YesNoOutcome(seed, res, not conf.live, res.model.last[0].under,
                        min_fuel_along(res.model), dt, valid_f_trace(F, dt))
