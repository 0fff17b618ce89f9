"""Render scoring results to report files and figures.

The tabular outputs are one row per bug plus a TOTAL row, as JSON or CSV
carrying the same six numbers per row.  Figures are PNG bar charts: per-bug
grouping outcomes, and a group-count comparison across dedup strategies when
baseline counts are supplied.  Everything is written byte-deterministically
(sorted keys, fixed geometry, pinned PNG metadata) so repeated runs can be
diffed.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .corpus import Metrics

ROW_FIELDS = ("crashes", "fault_sig_count", "group_count", "correct", "incorrect", "missed")

# a tEXt chunk with the creating library's version would defeat byte-stable
# output, so pin the only metadata entry matplotlib writes by default
_PNG_METADATA = {"Software": "fuzzeraid"}


def report_rows(metrics: Metrics):
    """Per-bug rows sorted by bug id, then the TOTAL row."""
    rows = [(bug, metrics.per_bug[bug]) for bug in sorted(metrics.per_bug)]
    rows.append(("TOTAL", metrics.totals))
    return rows


def write_json_report(path, metrics: Metrics) -> Path:
    path = Path(path)
    payload = json.dumps(metrics.to_json_dict(), indent=2, sort_keys=True) + "\n"
    path.write_text(payload)
    return path


def write_csv_report(path, metrics: Metrics) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("bug",) + ROW_FIELDS)
        for bug, row in report_rows(metrics):
            writer.writerow([bug] + [row[f] for f in ROW_FIELDS])
    return path


def render_outcome_figure(path, metrics: Metrics) -> Path:
    """Stacked bars: correct / incorrect / missed crashes for each bug."""
    path = Path(path)
    bugs = sorted(metrics.per_bug)
    correct = [metrics.per_bug[b]["correct"] for b in bugs]
    incorrect = [metrics.per_bug[b]["incorrect"] for b in bugs]
    missed = [metrics.per_bug[b]["missed"] for b in bugs]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.8 * len(bugs) + 2.0), 4.0), dpi=100)
    xs = range(len(bugs))
    ax.bar(xs, correct, color="#4c9f70", label="correct")
    ax.bar(xs, incorrect, bottom=correct, color="#c0504d", label="incorrect")
    bottoms = [c + i for c, i in zip(correct, incorrect)]
    ax.bar(xs, missed, bottom=bottoms, color="#9b9b9b", label="missed")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(bugs, rotation=45, ha="right")
    ax.set_ylabel("crashes")
    ax.set_title("grouping outcome per bug")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="png", metadata=_PNG_METADATA)
    plt.close(fig)
    return path


def render_strategy_figure(path, strategy_counts: dict) -> Path:
    """Group counts per dedup strategy, log scale when the spread is wide."""
    path = Path(path)
    names = list(strategy_counts)
    counts = [strategy_counts[n] for n in names]
    fig, ax = plt.subplots(figsize=(max(6.0, 1.2 * len(names) + 2.0), 4.0), dpi=100)
    xs = range(len(names))
    ax.bar(xs, counts, color="#4878a8")
    for x, c in zip(xs, counts):
        ax.annotate(str(c), (x, c), ha="center", va="bottom")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel("groups")
    ax.set_title("group count by dedup strategy")
    if counts and max(counts) >= 20 * max(1, min(counts)):
        ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, format="png", metadata=_PNG_METADATA)
    plt.close(fig)
    return path


def write_report(directory, metrics: Metrics, fmt: str = "json",
                 strategy_counts: dict = None) -> list:
    """Write the tabular report and figures into directory, return the paths."""
    if fmt not in ("json", "csv"):
        raise ValueError(f"unknown report format: {fmt!r}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "json":
        written.append(write_json_report(directory / "report.json", metrics))
    else:
        written.append(write_csv_report(directory / "report.csv", metrics))
    written.append(render_outcome_figure(directory / "fig_per_bug.png", metrics))
    if strategy_counts:
        written.append(
            render_strategy_figure(directory / "fig_groups_by_strategy.png", strategy_counts)
        )
    return written
