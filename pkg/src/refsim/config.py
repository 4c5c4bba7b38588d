"""Scenario and exploration configs: JSON files merged with command-line flags.

Every key is checked against a whitelist for the command and scenario, and
every value against its expected type, before anything runs.  Flags win
over the file.
"""

from __future__ import annotations

import json
from typing import Any, Dict, Optional

SCENARIOS = ("incr", "tpc", "paxos", "gcounter", "yesno")
MODELS = ("tc", "sdpl", "fyn")


class ConfigError(Exception):
    pass


_INT = ("int",)
_NUM = ("num",)
_STR = ("str",)
_BOOL = ("bool",)
_LIST = ("list",)

COMMON_RUN = {
    "scenario": _STR, "seed": _INT, "seeds": ("int", "list"), "horizon": _INT,
    "drop_p": _NUM, "policy": ("str", "dict"), "W": _INT, "D": _INT,
    "checks": _LIST, "trace_out": ("str", "null"), "report_out": ("str", "null"),
    "snapshot_every": _INT,
}

SCENARIO_KEYS = {
    "incr": {},
    "tpc": {"rms": _INT, "coins": ("str", "dict")},
    "paxos": {"proposers": _INT, "acceptors": _INT, "learners": _INT, "values": _LIST,
              "retries": _INT, "poll": ("int", "null")},
    "gcounter": {"replicas": _INT, "incrs": _INT, "settle": ("int", "null"),
                 "window": ("int", "null"), "starve_routes": _LIST},
    "yesno": {"k": _INT, "f_init": _INT, "fuel_limit": _INT},
}

SCENARIO_DEFAULTS = {
    "incr": {"horizon": 200, "policy": "random"},
    "tpc": {"rms": 3, "coins": "random", "horizon": 10_000},
    "paxos": {"proposers": 2, "acceptors": 3, "learners": 2, "values": ["x", "y"],
              "retries": 3, "poll": 40, "horizon": 20_000},
    "gcounter": {"replicas": 3, "incrs": 5, "settle": 2000, "window": None,
                 "starve_routes": [], "horizon": 50_000, "drop_p": 0.1},
    "yesno": {"k": 5, "f_init": 30, "fuel_limit": 30, "horizon": 10_000},
}

RUN_DEFAULTS = {"seed": 0, "seeds": 1, "drop_p": 0.0, "policy": "fair", "W": 8, "D": 32,
                "checks": None, "trace_out": None, "report_out": None, "snapshot_every": 0}

EXPLORE_KEYS = {
    "model": _STR, "rms": _INT, "proposers": _INT, "acceptors": _INT, "values": _LIST,
    "quorum": ("int", "null"), "ctr_max": _INT, "m_max": _INT, "criterion": _BOOL,
    "progress": _STR, "budget": _INT, "max_depth": ("int", "null"), "graded": _BOOL,
    "fault": ("str", "null"), "cross_check": _BOOL, "report_out": ("str", "null"),
}

EXPLORE_DEFAULTS = {
    "rms": 3, "proposers": 2, "acceptors": 3, "values": ["x", "y"], "quorum": None,
    "ctr_max": 1, "m_max": 10, "criterion": False, "progress": "guarded",
    "budget": 1_000_000, "max_depth": None, "graded": False, "fault": None,
    "cross_check": True, "report_out": None,
}


def _type_ok(v: Any, kinds) -> bool:
    for k in kinds:
        if k == "int" and isinstance(v, int) and not isinstance(v, bool):
            return True
        if k == "num" and isinstance(v, (int, float)) and not isinstance(v, bool):
            return True
        if k == "str" and isinstance(v, str):
            return True
        if k == "bool" and isinstance(v, bool):
            return True
        if k == "list" and isinstance(v, list):
            return True
        if k == "dict" and isinstance(v, dict):
            return True
        if k == "null" and v is None:
            return True
    return False


def load_json(path: Optional[str]) -> Dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def merge(file_cfg: Dict[str, Any], flags: Dict[str, Any]) -> Dict[str, Any]:
    """Flags that were given (not None) override the file."""
    out = dict(file_cfg)
    out.update({k: v for k, v in flags.items() if v is not None})
    return out


def _check_keys(cfg: Dict[str, Any], allowed: Dict[str, tuple], what: str) -> None:
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown {what} key(s): {', '.join(unknown)}")
    for k, v in cfg.items():
        if not _type_ok(v, allowed[k]):
            raise ConfigError(f"bad type for {k!r}: {v!r}")


def validate_run(cfg: Dict[str, Any]) -> Dict[str, Any]:
    scen = cfg.get("scenario")
    if scen not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {', '.join(SCENARIOS)}, got {scen!r}")
    allowed = {**COMMON_RUN, **SCENARIO_KEYS[scen]}
    _check_keys(cfg, allowed, f"{scen} config")
    out = {**RUN_DEFAULTS, **SCENARIO_DEFAULTS[scen], **cfg}
    if not 0.0 <= out["drop_p"] <= 1.0:
        raise ConfigError("drop_p must lie in [0, 1]")
    if out["horizon"] < 1:
        raise ConfigError("horizon must be positive")
    if out["W"] < 1 or out["D"] < 1:
        raise ConfigError("W and D must be positive")
    seeds = out["seeds"]
    if isinstance(seeds, int):
        if seeds < 1:
            raise ConfigError("seeds must be positive")
        out["seed_list"] = list(range(out["seed"], out["seed"] + seeds))
    else:
        if not seeds or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
            raise ConfigError("seeds must be a count or a non-empty list of ints")
        out["seed_list"] = list(seeds)
    pol = out["policy"]
    kind = pol if isinstance(pol, str) else pol.get("kind", "fair")
    if kind not in ("fair", "random"):
        raise ConfigError(f"unknown policy {kind!r}")
    if scen == "tpc" and out["rms"] < 1:
        raise ConfigError("rms must be positive")
    if scen == "paxos":
        if out["proposers"] < 1 or out["acceptors"] < 1 or out["learners"] < 1:
            raise ConfigError("node counts must be positive")
        if len(set(out["values"])) != len(out["values"]) or not out["values"]:
            raise ConfigError("values must be distinct and non-empty")
    if scen == "gcounter" and (out["replicas"] < 1 or out["incrs"] < 0):
        raise ConfigError("replicas must be positive and incrs non-negative")
    if scen == "yesno" and (out["k"] < 1 or out["f_init"] < 0 or out["fuel_limit"] < 0):
        raise ConfigError("k must be positive and fuels non-negative")
    return out


def validate_explore(cfg: Dict[str, Any]) -> Dict[str, Any]:
    model = cfg.get("model")
    if model not in MODELS:
        raise ConfigError(f"model must be one of {', '.join(MODELS)}, got {model!r}")
    _check_keys(cfg, EXPLORE_KEYS, "explore config")
    out = {**EXPLORE_DEFAULTS, **cfg}
    if out["budget"] < 1:
        raise ConfigError("budget must be positive")
    if out["progress"] not in ("guarded", "flag", "yes"):
        raise ConfigError("progress must be guarded, flag or yes")
    if out["fault"] not in (None, "no-cancommit", "no-commit-rule"):
        raise ConfigError(f"unknown fault {out['fault']!r}")
    for k in ("rms", "proposers", "acceptors", "m_max", "ctr_max"):
        if out[k] < 0:
            raise ConfigError(f"{k} must be non-negative")
    return out
