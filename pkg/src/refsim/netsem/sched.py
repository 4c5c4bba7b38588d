"""Scheduler policies.

Every policy is deterministic given its seed and the configuration history.
"""

from __future__ import annotations

import random
from collections import deque
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .core import Configuration, Deliver, Drop, StepLabel, ThreadStep


class Policy:
    name = "policy"

    def choose(self, conf: Configuration) -> StepLabel:
        raise NotImplementedError


class RandomPolicy(Policy):
    """Uniform over ``enabled_steps``; Drop labels only when ``allow_drop``."""

    name = "random"

    def __init__(self, seed: int, allow_drop: bool = True):
        self.rng = random.Random(seed)
        self.allow_drop = allow_drop

    def choose(self, conf: Configuration) -> StepLabel:
        steps = conf.enabled_steps(self.allow_drop)
        if not steps:
            raise RuntimeError("no enabled steps")
        return steps[self.rng.randrange(len(steps))]


class ScriptedPolicy(Policy):
    """Replays a fixed label sequence, then falls back to ``then`` (if any)."""

    name = "scripted"

    def __init__(self, labels: Iterable[StepLabel], then: Optional[Policy] = None):
        self.labels = deque(labels)
        self.then = then

    def choose(self, conf: Configuration) -> StepLabel:
        if self.labels:
            return self.labels.popleft()
        if self.then is None:
            raise RuntimeError("script exhausted")
        return self.then.choose(conf)


class FairPolicy(Policy):
    """Windowed fair scheduling over a lossy network.

    * Thread fairness: counted over thread decisions, every live thread is
      chosen at least once in any ``max(W, live threads)`` consecutive thread
      decisions (earliest-deadline-first when the window gets tight).
    * Message fairness: counted over all decisions, every deliverable message
      is delivered or dropped within ``D`` decisions of entering the soup.
    * Loss: a message decision drops with probability ``drop_p``, but never
      more than ``max_route_drops`` consecutive times on one (src ip, dst ip)
      route.  Messages on ``starve_routes`` are always dropped (adversarial).

    Undeliverable messages (no bound destination) are never dropped when
    ``drop_p`` is 0; they wait until a socket is bound.
    """

    name = "fair"

    def __init__(self, seed: int, W: int = 8, D: int = 32, drop_p: float = 0.0,
                 max_route_drops: int = 3,
                 starve_routes: Sequence[Tuple[str, str]] = ()):
        if W < 1 or D < 1:
            raise ValueError("windows must be positive")
        if not 0.0 <= drop_p <= 1.0:
            raise ValueError("drop_p must lie in [0, 1]")
        self.rng = random.Random(seed)
        self.W = W
        self.D = D
        self.drop_p = drop_p
        self.max_route_drops = max_route_drops
        self.starve = {tuple(r) for r in starve_routes}
        self.now = 0
        self.tnow = 0
        self.deadline: Dict[int, int] = {}
        self.births: deque = deque()
        self.parked: List[int] = []
        self.seen_mid = 0
        self.route_drops: Dict[Tuple[str, str], int] = {}
        self.forced_threads = 0
        self.forced_msgs = 0

    def _window(self, nlive: int) -> int:
        return self.W if self.W >= nlive else nlive

    def _msg_decision(self, conf: Configuration, mid: int) -> StepLabel:
        msg = conf.soup[mid]
        route = (msg.src.ip, msg.dst.ip)
        if route in self.starve:
            return Drop(mid)
        if not conf.deliverable(msg):
            return Drop(mid)
        if self.drop_p > 0.0 and self.route_drops.get(route, 0) < self.max_route_drops \
                and self.rng.random() < self.drop_p:
            self.route_drops[route] = self.route_drops.get(route, 0) + 1
            return Drop(mid)
        self.route_drops[route] = 0
        return Deliver(mid)

    def _thread_decision(self, conf: Configuration) -> StepLabel:
        live = conf.live
        dl = self.deadline
        t = self.tnow
        self.tnow = t + 1
        win = self._window(len(live))
        for tid in live:
            if tid not in dl:
                dl[tid] = t + win - 1
        earliest = min(live, key=dl.__getitem__)
        pick = None
        if dl[earliest] - t + 1 <= len(live):
            ds = sorted(dl[x] for x in live)
            for k, d in enumerate(ds, 1):
                if d - t + 1 <= k:
                    pick = earliest
                    self.forced_threads += 1
                    break
        if pick is None:
            pick = live[self.rng.randrange(len(live))]
        dl[pick] = t + win
        return ThreadStep(pick)

    def choose(self, conf: Configuration) -> StepLabel:
        now = self.now
        self.now = now + 1
        soup = conf.soup
        births = self.births
        for mid in range(self.seen_mid, conf.next_mid):
            if mid in soup:
                births.append((now, mid))
        self.seen_mid = conf.next_mid
        for tid in [t for t in self.deadline if conf.threads[t].halted]:
            del self.deadline[tid]

        # parked messages became deliverable?
        if self.parked:
            for i, mid in enumerate(self.parked):
                if mid not in soup:
                    continue
                if conf.deliverable(soup[mid]):
                    del self.parked[i]
                    self.forced_msgs += 1
                    return self._msg_decision(conf, mid)
            self.parked = [m for m in self.parked if m in soup]

        # overdue messages
        D = self.D
        while births:
            born, mid = births[0]
            if mid not in soup:
                births.popleft()
                continue
            if now - born < D - 1:
                break
            births.popleft()
            if conf.deliverable(soup[mid]) or self.drop_p > 0.0 \
                    or (soup[mid].src.ip, soup[mid].dst.ip) in self.starve:
                self.forced_msgs += 1
                return self._msg_decision(conf, mid)
            self.parked.append(mid)

        nthreads = len(conf.live)
        nsoup = len(soup)
        if nthreads + nsoup == 0:
            raise RuntimeError("no enabled steps")
        r = self.rng.randrange(nthreads + nsoup)
        if r < nthreads:
            return self._thread_decision(conf)
        mid = _nth_key(soup, r - nthreads)
        msg = soup[mid]
        if conf.deliverable(msg) or (msg.src.ip, msg.dst.ip) in self.starve:
            return self._msg_decision(conf, mid)
        if self.drop_p > 0.0 and self.rng.random() < self.drop_p:
            return Drop(mid)
        if nthreads:
            return self._thread_decision(conf)
        return Drop(mid)


def _nth_key(d: dict, n: int) -> int:
    if n == 0:
        return next(iter(d))
    if n * 2 < len(d):
        it = iter(d)
        for _ in range(n):
            next(it)
        return next(it)
    it = reversed(d)
    for _ in range(len(d) - 1 - n):
        next(it)
    return next(it)


def make_policy(spec: dict, seed: int) -> Policy:
    """Build a policy from a config dict such as ``{"kind": "fair", "W": 8}``."""
    spec = dict(spec)
    kind = spec.pop("kind", "fair")
    if kind == "fair":
        starve = [tuple(r) for r in spec.pop("starve_routes", [])]
        return FairPolicy(seed, starve_routes=starve, **spec)
    if kind == "random":
        return RandomPolicy(seed, **spec)
    if kind == "scripted":
        return ScriptedPolicy(spec["labels"])
    raise ValueError(f"unknown policy kind {kind!r}")


PolicyFactory = Callable[[int], Policy]
