"""JSONL export of execution traces."""

from __future__ import annotations

import json
import zlib
from typing import Any, Callable, Iterable, Optional

from .core import ConfView, event_to_json, label_to_json


def canon(value: Any) -> Any:
    """JSON-safe canonical form of heap values."""
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (tuple, list)):
        return [canon(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted((canon(v) for v in value), key=repr)
    if isinstance(value, dict):
        return {str(k): canon(v) for k, v in sorted(value.items(), key=lambda kv: repr(kv[0]))}
    return repr(value)


def heap_digest(heap: dict) -> str:
    items = sorted((str(k), canon(v)) for k, v in heap.items())
    blob = json.dumps(items, separators=(",", ":"), sort_keys=True).encode()
    return f"{zlib.crc32(blob):08x}"


def view_record(view: ConfView, snapshot: bool = False,
                model: Any = None, model_encode: Optional[Callable[[Any], Any]] = None) -> dict:
    rec = {
        "index": view.index,
        "label": label_to_json(view.label),
        "events": [event_to_json(e) for e in view.events],
        "soup": view.soup_size,
        "digest": {ip: heap_digest(h) for ip, h in sorted(view.heaps.items())},
    }
    if snapshot:
        rec["heaps"] = {ip: {str(k): canon(v) for k, v in sorted(h.items())}
                        for ip, h in sorted(view.heaps.items())}
    if model_encode is not None:
        rec["model"] = model_encode(model)
    return rec


def dumps(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


def write_exec_jsonl(fh, views: Iterable[ConfView], models: Optional[Iterable[Any]] = None,
                     model_encode: Optional[Callable[[Any], Any]] = None,
                     snapshot_every: int = 0, header: Optional[dict] = None) -> int:
    """Write one record per step to an open text file; returns the record count."""
    if header is not None:
        fh.write(dumps(header) + "\n")
    n = 0
    mit = iter(models) if models is not None else None
    for view in views:
        model = next(mit) if mit is not None else None
        snap = snapshot_every > 0 and view.index % snapshot_every == 0
        fh.write(dumps(view_record(view, snap, model, model_encode if mit is not None else None)))
        fh.write("\n")
        n += 1
    return n
