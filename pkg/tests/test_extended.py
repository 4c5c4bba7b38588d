"""Opt-in long checks (set REFSIM_EXTENDED=1).  About 11 minutes and 3.5 GB."""

import os

import pytest

from refsim import explorer as ex
from refsim.protocols import paxos

pytestmark = pytest.mark.skipif(os.environ.get("REFSIM_EXTENDED") != "1",
                                reason="extended check; set REFSIM_EXTENDED=1")

VALS = ("x", "y")


def test_sdpl_ctr1_full_space_is_consistent():
    r = ex.bfs(paxos.sdpl_init(2, 3),
               lambda s: paxos.sdpl_transitions(s, VALS, None, 1, skip_self=True),
               lambda s: paxos.consistent(s, 3), ex.ExploreBudget(10**7),
               key=paxos.SdplKeyer(2, 3, VALS, 1),
               check_edge=lambda lbl, s, t: lbl[0] == "2b", graded=True)
    assert r.ok
    assert r.reachable == 8_594_724 and r.depth == 34
