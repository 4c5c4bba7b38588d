"""Report figures, rendered headless with matplotlib's Agg backend."""

from __future__ import annotations

import os
from collections import Counter
from typing import Dict, List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STATUS_COLORS = {"pass": "#4c9a2a", "inconclusive": "#d9a21b", "fail": "#c0392b"}


def _save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def check_summary(seeds: List[dict], path: str, title: str) -> str:
    """Stacked bar of pass/inconclusive/fail counts per check."""
    names: List[str] = []
    for rep in seeds:
        for k in rep["checks"]:
            if k not in names:
                names.append(k)
    counts = {n: Counter(rep["checks"].get(n) for rep in seeds) for n in names}
    fig, ax = plt.subplots(figsize=(max(4, 1.1 * len(names) + 2), 3.5))
    bottom = [0] * len(names)
    for status, color in STATUS_COLORS.items():
        vals = [counts[n][status] for n in names]
        ax.bar(names, vals, bottom=bottom, color=color, label=status)
        bottom = [b + v for b, v in zip(bottom, vals)]
    ax.set_ylabel("seeds")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.tick_params(axis="x", labelrotation=30)
    return _save(fig, path)


def steps_histogram(seeds: List[dict], path: str, title: str) -> str:
    steps = [rep["metrics"].get("steps", 0) for rep in seeds]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(steps, bins=min(30, max(5, len(steps) // 4)), color="#34699a")
    ax.set_xlabel("steps per run")
    ax.set_ylabel("seeds")
    ax.set_title(title)
    return _save(fig, path)


def series_plot(series: Dict[str, list], scenario: str, path: str) -> str:
    """One representative seed: model counter, per-row totals, or min fuel."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    if scenario == "gcounter":
        rows = list(zip(*series["rows"]))
        for i, r in enumerate(rows):
            ax.step(series["t"], r, where="post", label=f"row {i}")
        ax.set_ylabel("row total")
        ax.legend(fontsize=8)
    elif scenario == "yesno":
        ax.plot(series["fuel"], color="#8e44ad")
        ax.set_ylabel("min fuel")
    else:
        ax.plot(series["model"], color="#34699a")
        ax.set_ylabel("model state")
    ax.set_xlabel("step")
    ax.set_title(f"{scenario}: first seed")
    return _save(fig, path)


def layer_plot(layers: List[int], path: str, title: str) -> str:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(range(len(layers)), layers, color="#34699a")
    ax.set_xlabel("depth")
    ax.set_ylabel("new states")
    if layers and max(layers) > 1000:
        ax.set_yscale("log")
    ax.set_title(title)
    return _save(fig, path)


def run_figures(report: dict, first_series: Dict[str, list], base: str) -> List[str]:
    scen = report["scenario"]
    out = [check_summary(report["seeds"], f"{base}_checks.png", f"{scen}: checks by seed"),
           steps_histogram(report["seeds"], f"{base}_steps.png", f"{scen}: run length")]
    if first_series:
        out.append(series_plot(first_series, scen, f"{base}_series.png"))
    return [os.path.basename(p) for p in out]


def explore_figures(report: dict, base: str) -> List[str]:
    layers = report["result"].get("layers") or []
    if not layers:
        return []
    p = layer_plot(layers, f"{base}_layers.png", f"{report['model']}: states per depth")
    return [os.path.basename(p)]
