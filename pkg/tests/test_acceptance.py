"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``CRITERION <n>: PASS|FAIL`` line (visible with
``pytest -s`` and in the captured output of failures).
"""

import random
import time
from contextlib import contextmanager

import pytest

from refsim import explorer as ex
from refsim.cli import main
from refsim.netsem import FairPolicy
from refsim.protocols import gcounter, incr, paxos, tpc, yesno
from refsim.refinement import check_rel_all_prefixes

VALS = ("x", "y")


@contextmanager
def criterion(n, capsys, title):
    t0 = time.perf_counter()
    info = {}
    ok = False
    try:
        yield info
        ok = True
    finally:
        dt = time.perf_counter() - t0
        extra = ", ".join(f"{k}={v}" for k, v in info.items())
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} {title} "
                  f"({dt:.2f} s{', ' + extra if extra else ''})")


def test_c1_tc_agreement_exhaustive(capsys):
    with criterion(1, capsys, "TC 3 RMs agreement, BFS = DFS") as info:
        t0 = time.perf_counter()
        trans = ex.sts_transitions(tpc.tc_sts(3))
        b = ex.bfs(tpc.tc_init(3), trans, tpc.tc_agreement)
        d = ex.dfs(tpc.tc_init(3), trans, tpc.tc_agreement)
        dt = time.perf_counter() - t0
        info.update(states=b.reachable, dfs_states=d.reachable)
        assert b.ok and d.ok
        assert b.reachable == d.reachable
        assert dt < 1.0


def test_c2_sdpl_consistency_exhaustive(capsys):
    with criterion(2, capsys, "SDPL 2 proposers, ctr<=1, 3 acceptors, 2 values") as info:
        t0 = time.perf_counter()
        r = ex.bfs(paxos.sdpl_init(2, 3),
                   lambda s: paxos.sdpl_transitions(s, VALS, None, 1, skip_self=True),
                   lambda s: paxos.consistent(s, 3), ex.ExploreBudget(10**6),
                   key=paxos.SdplKeyer(2, 3, VALS, 1),
                   check_edge=lambda lbl, s, t: lbl[0] == "2b")
        dt = time.perf_counter() - t0
        info.update(status=r.status, states=r.reachable, depth=r.depth)
        assert not r.violation
        assert r.status == ex.COMPLETE, "state budget exhausted"
        assert dt < 60.0


def test_c3_sdpl_walks_project(capsys):
    with criterion(3, capsys, "1000 SDPL walks project to SDP traces") as info:
        t0 = time.perf_counter()
        rng = random.Random(0)
        init = paxos.sdpl_init(2, 3)
        trans = lambda s: paxos.sdpl_transitions(s, VALS)
        bad = 0
        for _ in range(1000):
            w = ex.random_walk(init, trans, 20, rng)
            if not ex.project_check(w, paxos.project, paxos.sdp_is_step):
                bad += 1
        info.update(bad=bad)
        assert bad == 0
        assert time.perf_counter() - t0 < 5.0


def test_c4_tpc_runs(capsys):
    with criterion(4, capsys, "TPC 500 lossless commit + 500 lossy") as info:
        t0 = time.perf_counter()
        bad = 0
        for seed in range(500):
            out = tpc.run(3, FairPolicy(seed), seed, coins="commit")
            topo = tpc.setup(3)[1]
            if not (out.ok and out.tm_result == "COMMITTED" and check_rel_all_prefixes(
                    tpc.TcRel(topo), out.result.exec, out.result.model) is True):
                bad += 1
        lossy = 0
        for seed in range(500):
            out = tpc.run(3, FairPolicy(seed, drop_p=0.2), seed, horizon=10_000)
            if not out.ok:
                lossy += 1
        info.update(bad_lossless=bad, bad_lossy=lossy)
        assert bad == 0 and lossy == 0
        assert time.perf_counter() - t0 < 60.0


def test_c5_paxos_runs(capsys):
    with criterion(5, capsys, "Paxos 200 seeds x drop_p {0, 0.1}") as info:
        t0 = time.perf_counter()
        bad = []
        for drop_p in (0.0, 0.1):
            for seed in range(200):
                out = paxos.run(FairPolicy(seed, drop_p=drop_p), seed, drop_p=drop_p)
                if not (out.result.ok and out.learners_agree and not out.assertion_failed):
                    bad.append((drop_p, seed))
        info.update(bad=len(bad))
        assert not bad, bad[:5]
        assert time.perf_counter() - t0 < 120.0


def test_c6_gcounter_runs(capsys):
    with criterion(6, capsys, "G-Counter 100 seeds, fair W=8 D=32 drop 0.1") as info:
        t0 = time.perf_counter()
        bad = []
        for seed in range(100):
            pol = FairPolicy(seed, W=8, D=32, drop_p=0.1)
            out = gcounter.run(3, 5, pol, seed, horizon=50_000, D=32, settle=2000)
            v = out.verdicts
            if not (out.result.ok and v["ev_cons"].ok and v["net_fair_del"].ok
                    and out.result.model.last[0] == (5, 5, 5)):
                bad.append(seed)
        starved = gcounter.run(3, 5, FairPolicy(0, W=8, D=32, drop_p=0.1,
                                                starve_routes=[("r0", "r1")]),
                               0, horizon=6000, D=32)
        info.update(bad=len(bad), negative=starved.verdicts["net_fair_del"].status)
        assert not bad, bad[:5]
        assert starved.verdicts["net_fair_del"].status == "fail"
        assert time.perf_counter() - t0 < 60.0


def test_c7_yesno(capsys):
    with criterion(7, capsys, "Yes/No criterion m<=10 + 200 fair runs k=5") as info:
        t0 = time.perf_counter()
        cr = yesno.check_criterion(10)
        runs = [yesno.run(5, FairPolicy(seed), seed, f_init=30, fuel_limit=30)
                for seed in range(200)]
        info.update(criterion=cr.ok, min_fuel=min(o.min_fuel for o in runs))
        assert cr.ok
        assert all(o.terminated for o in runs)
        assert sum(o.underflow for o in runs) == 0
        assert all(o.result.ok and o.valid_destutter for o in runs)
        assert time.perf_counter() - t0 < 10.0


def test_c8_incr(capsys):
    with criterion(8, capsys, "incr 200 steps") as info:
        t0 = time.perf_counter()
        res = incr.run(FairPolicy(0), 200)
        info.update(final=res.model.last)
        assert res.ok and res.stats.steps == 200
        assert check_rel_all_prefixes(incr.XiIncr(), res.exec, res.model) is True
        assert time.perf_counter() - t0 < 1.0


@pytest.mark.parametrize("dummy", [None])
def test_c9_determinism(capsys, tmp_path, dummy):
    with criterion(9, capsys, "same seed, byte-identical JSONL") as info:
        scen = [("paxos", ["--drop-p", "0.1"]), ("gcounter", []), ("tpc", ["--drop-p", "0.2"]),
                ("yesno", []), ("incr", [])]
        for name, extra in scen:
            blobs = []
            for i in range(2):
                p = tmp_path / f"{name}{i}.jsonl"
                main(["run", "--scenario", name, "--seed", "11", "--seeds", "2",
                      "--snapshot-every", "50", "--trace-out", str(p)] + extra)
                blobs.append(p.read_bytes())
            assert blobs[0] == blobs[1] and blobs[0]
        info.update(scenarios=len(scen))
