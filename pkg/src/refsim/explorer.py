"""Bounded exhaustive exploration of finitary models.

Breadth- and depth-first reachability with canonical-key deduplication,
invariant checking with parent-pointer witnesses, random walks, and the
projection check used for lifted systems.
"""

from __future__ import annotations

import random
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Hashable, Iterable, List, Optional, Tuple

from .model import Sts
from .traces import FiniteTrace

COMPLETE, EXHAUSTED = "complete", "exhausted"

Transitions = Callable[[Any], Iterable[Tuple[Any, Any]]]


@dataclass
class ExploreBudget:
    max_states: int = 1_000_000
    max_depth: Optional[int] = None


@dataclass
class ExploreResult:
    status: str
    reachable: int
    depth: int
    elapsed: float
    witness: Optional[List[Any]] = None
    witness_labels: Optional[List[Any]] = None
    checked: int = 0
    layers: List[int] = field(default_factory=list)

    @property
    def violation(self) -> bool:
        return self.witness is not None

    @property
    def ok(self) -> bool:
        """Complete and violation-free."""
        return self.status == COMPLETE and self.witness is None

    def to_json(self, encode: Callable[[Any], Any] = repr) -> dict:
        out = {"status": self.status, "reachable": self.reachable, "depth": self.depth,
               "elapsed_s": round(self.elapsed, 3), "invariant_checks": self.checked,
               "violation": self.violation, "layers": list(self.layers)}
        if self.witness is not None:
            out["witness"] = [encode(s) for s in self.witness]
            out["witness_labels"] = [repr(l) for l in self.witness_labels]
        return out


def sts_transitions(sts: Sts) -> Transitions:
    return lambda s: ((None, t) for t in sts.successors(s))


def _witness(parents: Dict[Hashable, tuple], states: Optional[Dict[Hashable, Any]], k):
    path, labels = [], []
    while k is not None:
        pk, lbl = parents[k]
        path.append(states[k] if states is not None else k)
        labels.append(lbl)
        k = pk
    path.reverse()
    labels.reverse()
    return path, labels[1:]


def _explore(init, transitions: Transitions, invariant: Callable[[Any], bool],
             budget: ExploreBudget, key: Optional[Callable[[Any], Hashable]],
             check_edge: Optional[Callable[[Any, Any, Any], bool]], lifo: bool) -> ExploreResult:
    t0 = time.perf_counter()
    keyf = key if key is not None else (lambda s: s)
    states: Optional[Dict[Hashable, Any]] = {} if key is not None else None
    k0 = keyf(init)
    parents: Dict[Hashable, tuple] = {k0: (None, None)}
    if states is not None:
        states[k0] = init
    checked = 1
    layers = [1]
    if not invariant(init):
        w, l = _witness(parents, states, k0)
        return ExploreResult(COMPLETE, 1, 0, time.perf_counter() - t0, w, l, checked, layers)
    frontier = deque([(init, k0, 0)])
    pop = frontier.pop if lifo else frontier.popleft
    max_states = budget.max_states
    max_depth = budget.max_depth
    deepest = 0
    status = COMPLETE
    while frontier:
        s, ks, d = pop()
        if max_depth is not None and d >= max_depth:
            status = EXHAUSTED
            continue
        for lbl, t in transitions(s):
            kt = keyf(t)
            if kt in parents:
                continue
            if len(parents) >= max_states:
                return ExploreResult(EXHAUSTED, len(parents), deepest,
                                     time.perf_counter() - t0, checked=checked, layers=layers)
            parents[kt] = (ks, lbl)
            if states is not None:
                states[kt] = t
            if d + 1 > deepest:
                deepest = d + 1
            if d + 1 >= len(layers):
                layers.append(0)
            layers[d + 1] += 1
            if check_edge is None or check_edge(lbl, s, t):
                checked += 1
                if not invariant(t):
                    w, l = _witness(parents, states, kt)
                    return ExploreResult(status, len(parents), deepest,
                                         time.perf_counter() - t0, w, l, checked, layers)
            frontier.append((t, kt, d + 1))
    return ExploreResult(status, len(parents), deepest, time.perf_counter() - t0,
                         checked=checked, layers=layers)


def bfs(init, transitions: Transitions, invariant: Callable[[Any], bool] = lambda s: True,
        budget: Optional[ExploreBudget] = None, key: Optional[Callable[[Any], Hashable]] = None,
        check_edge: Optional[Callable[[Any, Any, Any], bool]] = None,
        graded: bool = False) -> ExploreResult:
    """Breadth-first search; a reported witness is a shortest one.

    ``transitions(s)`` yields (label, successor) pairs.  ``key`` maps states
    to canonical keys (default: the state itself).  ``check_edge(label, s,
    t)`` may declare that the invariant cannot change along an edge, so it is
    not re-evaluated on ``t``; that is only sound for invariants preserved by
    such edges.

    ``graded`` declares that every transition leads from depth d to depth
    d + 1 and that no state occurs at two depths (true when some measure
    grows by exactly one per step).  Only the next layer is then kept for
    deduplication; a witness is recovered by a plain search bounded at the
    violation depth.
    """
    budget = budget or ExploreBudget()
    if graded:
        return _explore_graded(init, transitions, invariant, budget, key, check_edge)
    return _explore(init, transitions, invariant, budget, key, check_edge, False)


def _explore_graded(init, transitions, invariant, budget, key, check_edge) -> ExploreResult:
    t0 = time.perf_counter()
    keyf = key if key is not None else (lambda s: s)
    checked = 1
    layers = [1]
    if not invariant(init):
        return ExploreResult(COMPLETE, 1, 0, time.perf_counter() - t0, [init], [], checked, layers)
    total = 1
    layer = [init]
    depth = 0
    while layer:
        if budget.max_depth is not None and depth >= budget.max_depth:
            return ExploreResult(EXHAUSTED, total, depth, time.perf_counter() - t0,
                                 checked=checked, layers=layers)
        seen: set = set()
        nxt = []
        for s in layer:
            for lbl, t in transitions(s):
                kt = keyf(t)
                if kt in seen:
                    continue
                if total >= budget.max_states:
                    return ExploreResult(EXHAUSTED, total, depth, time.perf_counter() - t0,
                                         checked=checked, layers=layers + [len(nxt)])
                seen.add(kt)
                total += 1
                if check_edge is None or check_edge(lbl, s, t):
                    checked += 1
                    if not invariant(t):
                        w = _explore(init, transitions, invariant,
                                     ExploreBudget(budget.max_states, depth + 1), key, check_edge,
                                     False)
                        return ExploreResult(COMPLETE, total, depth + 1, time.perf_counter() - t0,
                                             w.witness, w.witness_labels, checked,
                                             layers + [len(nxt) + 1])
                nxt.append(t)
        layer = nxt
        if layer:
            depth += 1
            layers.append(len(layer))
    return ExploreResult(COMPLETE, total, depth, time.perf_counter() - t0,
                         checked=checked, layers=layers)


def dfs(init, transitions: Transitions, invariant: Callable[[Any], bool] = lambda s: True,
        budget: Optional[ExploreBudget] = None, key: Optional[Callable[[Any], Hashable]] = None,
        check_edge: Optional[Callable[[Any, Any, Any], bool]] = None) -> ExploreResult:
    """Depth-first counterpart of :func:`bfs` (witnesses need not be shortest)."""
    return _explore(init, transitions, invariant, budget or ExploreBudget(), key, check_edge, True)


def reachable_set(init, transitions: Transitions, key: Optional[Callable[[Any], Hashable]] = None,
                  max_states: int = 1_000_000) -> set:
    """Keys of all reachable states, by a plain recursive-free DFS."""
    keyf = key or (lambda s: s)
    seen = {keyf(init)}
    stack = [init]
    while stack:
        s = stack.pop()
        for _, t in transitions(s):
            k = keyf(t)
            if k not in seen:
                if len(seen) >= max_states:
                    raise RuntimeError("state budget exhausted")
                seen.add(k)
                stack.append(t)
    return seen


# -- walks and projections ---------------------------------------------------

def random_walk(init, transitions: Transitions, depth: int, rng: random.Random) -> FiniteTrace:
    """A uniformly random path of at most ``depth`` steps (shorter at a dead end)."""
    t = FiniteTrace.singleton(init)
    s = init
    for _ in range(depth):
        succ = [x for _, x in transitions(s)]
        if not succ:
            break
        s = succ[rng.randrange(len(succ))]
        t = t.extend(s)
    return t


def project_check(trace: Iterable[Any], project: Callable[[Any], Any],
                  base_is_step: Callable[[Any, Any], bool],
                  allow_stutter: bool = True) -> bool:
    """The projected trace is valid in the base system (stutters allowed)."""
    prev = None
    first = True
    for s in trace:
        p = project(s)
        if not first and not ((allow_stutter and p == prev) or base_is_step(prev, p)):
            return False
        prev = p
        first = False
    return True


def first_bad_projection(trace: Iterable[Any], project: Callable[[Any], Any],
                         base_is_step: Callable[[Any, Any], bool]) -> Optional[int]:
    items = [project(s) for s in trace]
    for i in range(1, len(items)):
        if items[i] != items[i - 1] and not base_is_step(items[i - 1], items[i]):
            return i
    return None
