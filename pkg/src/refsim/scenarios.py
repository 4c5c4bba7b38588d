"""Per-seed scenario runners used by the command line.

Each runner takes a validated config and a seed, optionally streams one
JSONL record per step to ``sink``, and returns a :class:`SeedReport` with a
pass/fail/inconclusive status per check plus scalar metrics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

from .netsem.core import AssertionFailed, SocketAddr
from .netsem.export import view_record
from .netsem.sched import FairPolicy, Policy, RandomPolicy
from .protocols import gcounter, incr, paxos, tpc, yesno

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"

CHECKS = {
    "incr": ("refinement",),
    "tpc": ("refinement", "agreement", "decision", "commit"),
    "paxos": ("refinement", "consistency", "agreement", "client", "decision"),
    "gcounter": ("refinement", "queries", "convergence", "net_fair_del", "net_fair_send",
                 "net_fair_rec", "model_fair"),
    "yesno": ("refinement", "termination", "destutter"),
}


def combine(statuses) -> str:
    """fail beats inconclusive beats pass; an empty set passes."""
    statuses = list(statuses)
    if FAIL in statuses:
        return FAIL
    if INCONCLUSIVE in statuses:
        return INCONCLUSIVE
    return PASS


@dataclass
class SeedReport:
    seed: int
    checks: Dict[str, str]
    metrics: Dict[str, Any] = field(default_factory=dict)
    violation: Optional[dict] = None
    series: Dict[str, List[Any]] = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"seed": self.seed, "checks": self.checks, "metrics": self.metrics}
        if self.violation is not None:
            out["violation"] = self.violation
        return out


def make_policy(cfg: dict, seed: int, starve=()) -> Policy:
    pol = cfg["policy"]
    spec = {"kind": pol} if isinstance(pol, str) else dict(pol)
    kind = spec.pop("kind", "fair")
    if kind == "random":
        return RandomPolicy(seed, allow_drop=cfg["drop_p"] > 0.0)
    params = {"W": cfg["W"], "D": cfg["D"], "drop_p": cfg["drop_p"]}
    params.update(spec)
    return FairPolicy(seed, starve_routes=starve, **params)


def _streamer(sink, seed: int, encode, snapshot_every: int):
    if sink is None:
        return None

    def on_step(view, model):
        rec = view_record(view, snapshot_every > 0 and view.index % snapshot_every == 0,
                          model, encode)
        rec["seed"] = seed
        sink(rec)
    return on_step


def _header(sink, scenario: str, seed: int, model0, encode) -> None:
    if sink is not None:
        sink({"kind": "header", "scenario": scenario, "seed": seed, "model": encode(model0)})


def _violation(res, encode) -> Optional[dict]:
    v = res.violation
    return None if v is None else v.to_json(encode)


def _ref(res) -> str:
    return PASS if res.ok else FAIL


# -- runners -----------------------------------------------------------------

def run_incr(cfg: dict, seed: int, sink=None) -> SeedReport:
    _header(sink, "incr", seed, 0, str)
    series: List[int] = []

    def on_step(view, model):
        series.append(model)
        if stream:
            stream(view, model)
    stream = _streamer(sink, seed, str, cfg["snapshot_every"])
    res = incr.run(make_policy(cfg, seed), cfg["horizon"], on_step=on_step)
    return SeedReport(seed, {"refinement": _ref(res)},
                      {"steps": res.stats.steps, "final": res.model.last},
                      _violation(res, str), {"model": series})


def run_tpc(cfg: dict, seed: int, sink=None) -> SeedReport:
    n = cfg["rms"]
    _header(sink, "tpc", seed, tpc.tc_init(n), tpc.encode)
    out = tpc.run(n, make_policy(cfg, seed), seed, cfg["horizon"], cfg["coins"],
                  on_step=_streamer(sink, seed, tpc.encode, cfg["snapshot_every"]))
    res = out.result
    model_ok = all(tpc.tc_agreement(d) for d in res.model)
    com, abo = [], []
    for _, ev in res.conf.send_events:
        if ev.msg.dst == SocketAddr("tm", 80):
            if ev.msg.body == "COMMITTED":
                com.append(ev.msg.src)
            elif ev.msg.body == "ABORTED":
                abo.append(ev.msg.src)
    wire_ok = tpc.wire_agreement(com, abo)
    decided = out.tm_result in ("COMMITTED", "ABORTED")
    lossy = cfg["drop_p"] > 0.0
    checks = {
        "refinement": _ref(res),
        "agreement": PASS if model_ok and wire_ok else FAIL,
        "decision": PASS if decided else (INCONCLUSIVE if lossy else FAIL),
    }
    if cfg["coins"] == "commit" and not lossy:
        checks["commit"] = PASS if out.tm_result == "COMMITTED" else FAIL
    return SeedReport(seed, checks, {"steps": res.stats.steps, "tm_result": out.tm_result},
                      _violation(res, tpc.encode))


def run_paxos(cfg: dict, seed: int, sink=None) -> SeedReport:
    P, A = cfg["proposers"], cfg["acceptors"]
    _header(sink, "paxos", seed, paxos.sdpl_init(P, A), paxos.encode)
    out = paxos.run(make_policy(cfg, seed), seed, cfg["horizon"], P, A, cfg["learners"],
                    cfg["values"], cfg["retries"], cfg["poll"], cfg["drop_p"],
                    on_step=_streamer(sink, seed, paxos.encode, cfg["snapshot_every"]))
    res = out.result
    decided = out.client_value is not None and not out.assertion_failed
    lossy = cfg["drop_p"] > 0.0
    checks = {
        "refinement": _ref(res),
        "consistency": PASS if len(out.chosen) <= 1 else FAIL,
        "agreement": PASS if out.learners_agree else FAIL,
        "client": FAIL if out.assertion_failed else PASS,
        "decision": PASS if decided else (INCONCLUSIVE if lossy else FAIL),
    }
    cv = out.client_value
    return SeedReport(seed, checks, {"steps": res.stats.steps,
                                     "chosen": sorted(out.chosen),
                                     "client": None if cv is None else repr(cv)},
                      _violation(res, paxos.encode))


def run_gcounter(cfg: dict, seed: int, sink=None) -> SeedReport:
    n = cfg["replicas"]
    starve = [tuple(r) for r in cfg["starve_routes"]]
    _header(sink, "gcounter", seed, gcounter.gc_init(n), gcounter.encode)
    out = gcounter.run(n, cfg["incrs"], make_policy(cfg, seed, starve), seed, cfg["horizon"],
                       cfg["D"], cfg["window"], cfg["settle"],
                       on_step=_streamer(sink, seed, gcounter.encode, cfg["snapshot_every"]))
    res = out.result
    v = out.verdicts
    bad_query = any(isinstance(q, AssertionFailed) for q in out.queries.values())
    checks = {
        "refinement": _ref(res),
        "queries": FAIL if bad_query else PASS,
        "convergence": v["ev_cons"].status,
        "net_fair_del": v["net_fair_del"].status,
        "net_fair_send": v["net_fair_send"].status,
        "net_fair_rec": v["net_fair_rec"].status,
        "model_fair": v["model_fair"].status,
    }
    conv = v["ev_cons"].detail["conv"]
    stab = v["ev_cons"].detail["stab"]
    metrics = {"steps": out.steps, "stab_step": stab["k"], "conv_step": conv["k"],
               "final": list(conv["v"]),
               "model_fair_max_lag": v["model_fair"].detail.get("max_lag"),
               "liveness": {k: x.to_json() for k, x in v.items()}}
    model = res.model.to_list()
    stride = max(1, len(model) // 400)
    series = {"t": list(range(0, len(model), stride)),
              "rows": [[sum(d[i]) for i in range(n)] for d in model[::stride]]}
    return SeedReport(seed, checks, metrics, _violation(res, gcounter.encode), series)


def _yn_encode(st) -> str:
    ls, lbl = st
    return (f"{','.join(map(str, ls.under))}|fuel={dict(ls.fuels)}|owner={dict(ls.mapping)}"
            f"|{'' if lbl is None else repr(tuple(lbl))}")


def run_yesno(cfg: dict, seed: int, sink=None) -> SeedReport:
    k = cfg["k"]
    F = yesno.fyn_model(k, cfg["fuel_limit"])
    from .model import live_init
    _header(sink, "yesno", seed, (live_init(F, 0, cfg["f_init"]), None), _yn_encode)
    out = yesno.run(k, make_policy(cfg, seed), seed, cfg["horizon"], cfg["f_init"],
                    cfg["fuel_limit"],
                    on_step=_streamer(sink, seed, _yn_encode, cfg["snapshot_every"]))
    res = out.result
    checks = {
        "refinement": _ref(res),
        "termination": PASS if out.terminated else FAIL,
        "destutter": PASS if out.valid_destutter else FAIL,
    }
    fuel = [ls.min_fuel() for ls, _ in res.model]
    return SeedReport(seed, checks, {"steps": res.stats.steps, "final": list(out.final),
                                     "min_fuel": out.min_fuel, "underflow": out.underflow,
                                     "role_steps": len(out.destuttered) - 1},
                      _violation(res, _yn_encode), {"fuel": fuel})


RUNNERS: Dict[str, Callable[..., SeedReport]] = {
    "incr": run_incr, "tpc": run_tpc, "paxos": run_paxos, "gcounter": run_gcounter,
    "yesno": run_yesno,
}


def run_seed(cfg: dict, seed: int, sink=None) -> SeedReport:
    rep = RUNNERS[cfg["scenario"]](cfg, seed, sink)
    wanted = cfg.get("checks")
    if wanted:
        rep.checks = {k: v for k, v in rep.checks.items() if k in wanted}
    return rep
