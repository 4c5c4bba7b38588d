import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from refsim.cli import main
from refsim.config import ConfigError, load_json, merge, validate_explore, validate_run
from refsim.scenarios import combine

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_explore_tc_writes_report_and_figure(tmp_path):
    rep = tmp_path / "tc.json"
    assert run_cli("explore", "--model", "tc", "--rms", 3, "--report-out", rep) == 0
    data = json.loads(rep.read_text())
    assert data["schema"] == 1 and data["verdict"] == "pass"
    assert data["result"]["reachable"] == 34 and data["cross_check"]["agree"]
    for f in data["figures"]:
        assert (tmp_path / f).stat().st_size > 0


def test_explore_planted_fault_fails(tmp_path, capsys):
    assert run_cli("explore", "--model", "tc", "--rms", 3, "--fault", "no-cancommit") == 1
    assert "verdict: fail" in capsys.readouterr().out


def test_explore_fyn_criterion(capsys):
    assert run_cli("explore", "--model", "fyn", "--m-max", 10, "--criterion") == 0
    assert run_cli("explore", "--model", "fyn", "--m-max", 10, "--criterion",
                   "--progress", "yes") == 1


def test_sdpl_exhaustion_is_a_failure(capsys):
    assert run_cli("explore", "--model", "sdpl", "--budget", 500) == 1
    assert "exhausted" in capsys.readouterr().out


def test_small_sdpl_passes():
    assert run_cli("explore", "--model", "sdpl", "--acceptors", 2, "--ctr-max", 0) == 0


def test_unknown_config_key_is_rejected_without_artifacts(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "tpc", "bogus": 1}))
    out = tmp_path / "out"
    code = run_cli("run", "--config", cfg, "--report-out", out / "r.json",
                   "--trace-out", out / "t.jsonl")
    assert code == 2
    assert not out.exists()


@pytest.mark.parametrize("argv", [
    ["run", "--scenario", "yesno", "--rms", "3"],
    ["run", "--scenario", "tpc", "--check", "consistency"],
    ["run", "--scenario", "tpc", "--drop-p", "1.5"],
    ["run", "--scenario", "tpc", "--seeds", "0"],
    ["explore", "--model", "tc", "--budget", "0"],
])
def test_config_errors_exit_2(argv, tmp_path):
    assert main(argv + ["--report-out", str(tmp_path / "r.json")]) == 2
    assert not list(tmp_path.iterdir())


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--scenario", "nope"])
    assert exc.value.code == 2


def test_bad_json_is_config_error(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    assert run_cli("run", "--config", p) == 2


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "tpc", "seeds": 4, "drop_p": 0.2, "coins": "abort"}))
    rep = tmp_path / "r.json"
    assert run_cli("run", "--config", cfg, "--seeds", 2, "--drop-p", 0,
                   "--report-out", rep) == 0
    data = json.loads(rep.read_text())
    assert [s["seed"] for s in data["seeds"]] == [0, 1]
    assert data["config"]["drop_p"] == 0 and data["config"]["coins"] == "abort"
    assert data["aggregate"]["tm_results"] == {"ABORTED": 2}


def test_merge_precedence_unit():
    assert merge({"a": 1, "b": 2}, {"a": 5, "b": None}) == {"a": 5, "b": 2}


def test_tpc_check_filter(tmp_path, capsys):
    rep = tmp_path / "r.json"
    assert run_cli("run", "--scenario", "tpc", "--seeds", 10, "--drop-p", 0,
                   "--check", "agreement,refinement", "--report-out", rep) == 0
    data = json.loads(rep.read_text())
    assert set(data["check_verdicts"]) == {"agreement", "refinement"}


def test_yesno_reports_min_residual_fuel(tmp_path, capsys):
    rep = tmp_path / "yn.json"
    assert run_cli("run", "--scenario", "yesno", "--k", 5, "--seeds", 20,
                   "--report-out", rep) == 0
    agg = json.loads(rep.read_text())["aggregate"]
    assert agg["min_residual_fuel"] > 0 and agg["underflows"] == 0
    assert "min_residual_fuel" in capsys.readouterr().out


def test_trace_is_append_only_and_deterministic(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    args = ["run", "--scenario", "paxos", "--seed", 3, "--drop-p", 0.1]
    assert run_cli(*args, "--trace-out", a) == 0
    assert run_cli(*args, "--trace-out", b) == 0
    first = a.read_bytes()
    assert first == b.read_bytes()
    run_cli(*args, "--trace-out", a)
    assert a.read_bytes() == first + first
    recs = [json.loads(l) for l in first.decode().splitlines()]
    assert recs[0]["kind"] == "header" and recs[1]["index"] == 1


def test_starved_gcounter_fails(tmp_path):
    code = run_cli("run", "--config", CONFIGS / "c6_gcounter_starved.json",
                   "--report-out", tmp_path / "g.json")
    assert code == 1
    data = json.loads((tmp_path / "g.json").read_text())
    assert data["check_verdicts"]["net_fair_del"] == "fail"


def test_inconclusive_never_masks_fail():
    assert combine(["pass", "inconclusive", "fail"]) == "fail"
    assert combine(["pass", "inconclusive"]) == "inconclusive"
    assert combine([]) == "pass"


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.name)
def test_shipped_configs_validate(path):
    cfg = load_json(str(path))
    if "model" in cfg:
        validate_explore(cfg)
    else:
        validate_run(cfg)


def test_validate_run_defaults():
    cfg = validate_run({"scenario": "gcounter"})
    assert cfg["drop_p"] == 0.1 and cfg["seed_list"] == [0]
    assert validate_run({"scenario": "tpc", "seeds": [4, 2]})["seed_list"] == [4, 2]
    with pytest.raises(ConfigError):
        validate_run({"scenario": "tpc", "horizon": "long"})
    with pytest.raises(ConfigError):
        validate_run({"scenario": "paxos", "values": ["x", "x"]})


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "refsim.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "refsim" in out.stdout
