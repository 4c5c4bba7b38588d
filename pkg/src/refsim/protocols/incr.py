"""Two threads incrementing one shared counter with load/cas, coupled to the
successor model on the naturals."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..model import Sts
from ..netsem.core import Alloc, Cas, Configuration, Fork, Load
from ..netsem.sched import Policy
from ..refinement import CoupledResult, TraceRel, run_coupled

IP = "n0"
LABEL = "s"


def nat_sts() -> Sts:
    return Sts(0, lambda n: [n + 1], lambda a, b: b == a + 1, encode=str, name="nat")


def incr_loop(loc):
    while True:
        n = yield Load(loc)
        yield Cas(loc, n, n + 1, "incr")


def main():
    loc = yield Alloc(0, LABEL)
    yield Fork(incr_loop(loc), "incr")
    yield from incr_loop(loc)


def setup(coin_seed: int = 0) -> Configuration:
    conf = Configuration(coin_seed)
    conf.spawn(IP, main(), "main")
    return conf


def matcher(exec_t, model_t, view):
    eff = view.effect
    if type(eff) is Cas and view.result is True:
        return [model_t.last + 1]
    return [model_t.last]


class XiIncr(TraceRel):
    """Heap value at the location allocated with label ``s`` equals the model
    state; before that allocation the model is still 0.  The summary is the
    location (or None before allocation, wrapped to stay truthy)."""

    name = "xi_incr"

    def _check(self, loc, exec_t, model_t):
        view = exec_t.last
        for ev in view.events:
            if getattr(ev, "label", None) == LABEL:
                if loc is not None:
                    return None
                loc = ev.loc
        if loc is None:
            return ("pre",) if model_t.last == 0 else None
        if view.heap(loc.ip).get(loc) != model_t.last:
            return None
        return ("loc", loc)

    def init(self, exec_t, model_t):
        return self._check(None, exec_t, model_t)

    def step(self, summary, exec_t, model_t):
        return self._check(summary[1] if summary[0] == "loc" else None, exec_t, model_t)


def run(policy: Policy, horizon: int = 200, rel: Optional[TraceRel] = None,
        on_step=None) -> CoupledResult:
    return run_coupled(setup(), 0, matcher, rel or XiIncr(), policy, horizon, sts=nat_sts(),
                       on_step=on_step)
