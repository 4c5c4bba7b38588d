"""Command line: ``refsim run`` simulates scenarios, ``refsim explore`` model-checks.

Exit codes: 0 no check failed, 1 some check failed, 2 bad configuration (in
which case nothing is written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from collections import Counter
from typing import Any, Dict, List, Optional

from . import __version__, explorer, plots
from .config import (ConfigError, MODELS, SCENARIOS, load_json, merge, validate_explore,
                     validate_run)
from .netsem.export import dumps
from .protocols import paxos, tpc, yesno
from .scenarios import CHECKS, FAIL, INCONCLUSIVE, PASS, combine, run_seed

SCHEMA = 1
EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _seeds_arg(text: str):
    parts = [p for p in text.split(",") if p.strip()]
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seeds {text!r}")
    if len(vals) == 1 and "," not in text:
        return vals[0]
    return vals


def _csv(text: str) -> List[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="refsim", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"refsim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario over one or more seeds")
    r.add_argument("--scenario", choices=SCENARIOS)
    r.add_argument("--config", help="JSON config file; flags override its keys")
    r.add_argument("--seed", type=int, help="first seed")
    r.add_argument("--seeds", type=_seeds_arg, help="seed count, or a comma list of seeds")
    r.add_argument("--horizon", type=int)
    r.add_argument("--drop-p", dest="drop_p", type=float)
    r.add_argument("--policy", choices=("fair", "random"))
    r.add_argument("--W", type=int, help="thread fairness window")
    r.add_argument("--D", type=int, help="message delivery deadline")
    r.add_argument("--trace-out", dest="trace_out", help="append JSONL step records here")
    r.add_argument("--report-out", dest="report_out", help="write the JSON report here")
    r.add_argument("--check", dest="checks", type=_csv, help="comma list of checks to keep")
    r.add_argument("--snapshot-every", dest="snapshot_every", type=int)
    g = r.add_argument_group("scenario parameters")
    g.add_argument("--rms", type=int)
    g.add_argument("--coins", choices=("random", "commit", "abort"))
    g.add_argument("--proposers", type=int)
    g.add_argument("--acceptors", type=int)
    g.add_argument("--learners", type=int)
    g.add_argument("--values", type=_csv)
    g.add_argument("--retries", type=int)
    g.add_argument("--poll", type=int)
    g.add_argument("--replicas", type=int)
    g.add_argument("--incrs", type=int)
    g.add_argument("--settle", type=int)
    g.add_argument("--window", type=int)
    g.add_argument("--k", type=int)
    g.add_argument("--f-init", dest="f_init", type=int)
    g.add_argument("--fuel-limit", dest="fuel_limit", type=int)

    e = sub.add_parser("explore", help="exhaustively explore a finitary model")
    e.add_argument("--model", choices=MODELS)
    e.add_argument("--config")
    e.add_argument("--rms", type=int)
    e.add_argument("--proposers", type=int)
    e.add_argument("--acceptors", type=int)
    e.add_argument("--values", type=_csv)
    e.add_argument("--quorum", type=int)
    e.add_argument("--ctr-max", dest="ctr_max", type=int)
    e.add_argument("--m-max", dest="m_max", type=int)
    e.add_argument("--criterion", action="store_const", const=True)
    e.add_argument("--progress", choices=("guarded", "flag", "yes"))
    e.add_argument("--budget", type=int, help="maximum number of distinct states")
    e.add_argument("--max-depth", dest="max_depth", type=int)
    e.add_argument("--graded", action="store_const", const=True,
                   help="layer-only deduplication (sdpl)")
    e.add_argument("--fault", choices=("no-cancommit", "no-commit-rule"))
    e.add_argument("--no-cross-check", dest="cross_check", action="store_const", const=False)
    e.add_argument("--report-out", dest="report_out")
    return ap


def _flags(ns: argparse.Namespace, skip=("command", "config")) -> Dict[str, Any]:
    return {k: v for k, v in vars(ns).items() if k not in skip}


def _figure_base(report_out: str) -> str:
    root, ext = os.path.splitext(report_out)
    return root if ext else report_out


def _write_report(report: dict, path: Optional[str]) -> None:
    if path is None:
        return
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- run ---------------------------------------------------------------------

def _aggregate(scen: str, seeds: List[dict]) -> Dict[str, Any]:
    steps = [s["metrics"].get("steps", 0) for s in seeds]
    out: Dict[str, Any] = {"runs": len(seeds), "max_steps": max(steps), "total_steps": sum(steps)}
    if scen == "tpc":
        out["tm_results"] = dict(Counter(str(s["metrics"]["tm_result"]) for s in seeds))
    elif scen == "paxos":
        out["chosen"] = dict(Counter(",".join(s["metrics"]["chosen"]) or "-" for s in seeds))
    elif scen == "gcounter":
        lags = [s["metrics"]["model_fair_max_lag"] for s in seeds
                if s["metrics"]["model_fair_max_lag"] is not None]
        out["model_fair_max_lag"] = max(lags) if lags else None
        convs = [s["metrics"]["conv_step"] for s in seeds if s["metrics"]["conv_step"] is not None]
        out["max_conv_step"] = max(convs) if convs else None
    elif scen == "yesno":
        fuels = [s["metrics"]["min_fuel"] for s in seeds if s["metrics"]["min_fuel"] is not None]
        out["min_residual_fuel"] = min(fuels) if fuels else None
        out["underflows"] = sum(1 for s in seeds if s["metrics"]["underflow"])
    return out


def cmd_run(ns: argparse.Namespace) -> int:
    try:
        cfg = validate_run(merge(load_json(ns.config), _flags(ns)))
        if cfg["checks"]:
            bad = [c for c in cfg["checks"] if c not in CHECKS[cfg["scenario"]]]
            if bad:
                raise ConfigError(f"unknown check(s) for {cfg['scenario']}: {', '.join(bad)}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    scen = cfg["scenario"]
    trace_fh = None
    if cfg["trace_out"]:
        os.makedirs(os.path.dirname(os.path.abspath(cfg["trace_out"])), exist_ok=True)
        trace_fh = open(cfg["trace_out"], "a")
    sink = (lambda rec: trace_fh.write(dumps(rec) + "\n")) if trace_fh else None

    t0 = time.perf_counter()
    seeds: List[dict] = []
    first_series: Dict[str, list] = {}
    try:
        for i, seed in enumerate(cfg["seed_list"]):
            rep = run_seed(cfg, seed, sink)
            if i == 0:
                first_series = rep.series
            seeds.append(rep.to_json())
    finally:
        if trace_fh:
            trace_fh.close()

    per_check: Dict[str, dict] = {}
    for rep in seeds:
        for name, st in rep["checks"].items():
            c = per_check.setdefault(name, {PASS: 0, INCONCLUSIVE: 0, FAIL: 0})
            c[st] += 1
    check_verdicts = {n: combine(s for s, k in c.items() for _ in range(k))
                      for n, c in per_check.items()}
    verdict = combine(check_verdicts.values())
    report = {
        "schema": SCHEMA, "command": "run", "scenario": scen,
        "config": {k: v for k, v in cfg.items() if k != "seed_list"},
        "seeds": seeds, "checks": per_check, "check_verdicts": check_verdicts,
        "verdict": verdict, "aggregate": _aggregate(scen, seeds),
        "elapsed_s": round(time.perf_counter() - t0, 3), "figures": [],
    }
    if cfg["report_out"]:
        report["figures"] = plots.run_figures(report, first_series,
                                              _figure_base(cfg["report_out"]))
        _write_report(report, cfg["report_out"])

    for name, c in per_check.items():
        print(f"{scen} {name}: {check_verdicts[name]} "
              f"(pass {c[PASS]}, inconclusive {c[INCONCLUSIVE]}, fail {c[FAIL]})")
    for k, v in report["aggregate"].items():
        print(f"{scen} {k}: {v}")
    print(f"verdict: {verdict}")
    return EXIT_FAIL if verdict == FAIL else EXIT_PASS


# -- explore -----------------------------------------------------------------

_TC_FAULTS = {None: {}, "no-cancommit": {"commit_guard": False},
              "no-commit-rule": {"commit_rule": False}}


def explore_tc(cfg: dict) -> dict:
    n = cfg["rms"]
    sts = tpc.tc_sts(n, **_TC_FAULTS[cfg["fault"]])
    trans = explorer.sts_transitions(sts)
    budget = explorer.ExploreBudget(cfg["budget"], cfg["max_depth"])
    res = explorer.bfs(sts.init, trans, tpc.tc_agreement, budget)
    out = {"result": res.to_json(tpc.encode)}
    verdict = PASS if res.ok else FAIL
    if cfg["cross_check"]:
        d = explorer.dfs(sts.init, trans, tpc.tc_agreement, budget)
        same = (d.status == res.status and d.violation == res.violation
                and (res.violation or d.reachable == res.reachable))
        out["cross_check"] = {"dfs": d.to_json(tpc.encode), "agree": bool(same)}
        if not same:
            verdict = FAIL
    out["verdict"] = verdict
    return out


def explore_sdpl(cfg: dict) -> dict:
    P, A, vals, q, cm = (cfg["proposers"], cfg["acceptors"], tuple(cfg["values"]),
                         cfg["quorum"], cfg["ctr_max"])
    key = paxos.SdplKeyer(P, A, vals, cm)
    res = explorer.bfs(paxos.sdpl_init(P, A),
                       lambda s: paxos.sdpl_transitions(s, vals, q, cm, skip_self=True),
                       lambda s: paxos.consistent(s, A, q),
                       explorer.ExploreBudget(cfg["budget"], cfg["max_depth"]), key=key,
                       check_edge=lambda lbl, s, t: lbl[0] == "2b", graded=cfg["graded"])
    # an exhausted budget is a failure, never a pass
    return {"result": res.to_json(paxos.encode), "verdict": PASS if res.ok else FAIL}


_PROGRESS = {"guarded": yesno.progress, "flag": yesno.progress_by_flag,
             "yes": lambda s: yesno.YES}


def explore_fyn(cfg: dict) -> dict:
    m = cfg["m_max"]
    F = yesno.fyn_model(m)

    def yes_done_late(s):
        # Yes only shuts down once the counter is at most one
        return s[2] == 1 or s[0] <= 1
    res = explorer.bfs(F.init, lambda s: F.transitions(s), yes_done_late,
                       explorer.ExploreBudget(cfg["budget"], cfg["max_depth"]))
    dead = [s for s in yesno.reachable_states(m) if not F.transitions(s)] if res.ok else []
    out: Dict[str, Any] = {"result": res.to_json(repr), "dead_ends": [list(s) for s in dead]}
    verdict = PASS if res.ok else FAIL
    if cfg["criterion"]:
        cr = yesno.check_criterion(m, _PROGRESS[cfg["progress"]])
        out["criterion"] = {"progress": cfg["progress"], "ok": cr.ok, "states": cr.states,
                            "checked_transitions": cr.checked_transitions,
                            "failure": None if cr.failure is None
                            else {k: repr(v) for k, v in cr.failure.items()}}
        if not cr.ok:
            verdict = FAIL
    out["verdict"] = verdict
    return out


EXPLORERS = {"tc": explore_tc, "sdpl": explore_sdpl, "fyn": explore_fyn}


def cmd_explore(ns: argparse.Namespace) -> int:
    try:
        cfg = validate_explore(merge(load_json(ns.config), _flags(ns)))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = EXPLORERS[cfg["model"]](cfg)
    report = {"schema": SCHEMA, "command": "explore", "model": cfg["model"], "config": cfg,
              **out, "figures": []}
    if cfg["report_out"]:
        report["figures"] = plots.explore_figures(report, _figure_base(cfg["report_out"]))
        _write_report(report, cfg["report_out"])
    r = out["result"]
    print(f"{cfg['model']}: {r['status']}, {r['reachable']} states, depth {r['depth']}, "
          f"violation {r['violation']}, {r['elapsed_s']} s")
    if "cross_check" in out:
        c = out["cross_check"]
        print(f"dfs cross-check: {c['dfs']['reachable']} states, agree {c['agree']}")
    if "criterion" in out:
        c = out["criterion"]
        print(f"criterion ({c['progress']}): ok {c['ok']} over {c['states']} states, "
              f"{c['checked_transitions']} transitions")
        if c["failure"]:
            print(f"criterion failure: {c['failure']}")
    print(f"verdict: {out['verdict']}")
    return EXIT_FAIL if out["verdict"] == FAIL else EXIT_PASS


def main(argv: Optional[List[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    if ns.command == "run":
        return cmd_run(ns)
    return cmd_explore(ns)


if __name__ == "__main__":
    sys.exit(main())
