"""Report tables and figures."""

import csv
import json

import pytest

from fuzzeraid.corpus import Metrics
from fuzzeraid.reporting import (
    ROW_FIELDS,
    render_outcome_figure,
    render_strategy_figure,
    report_rows,
    write_csv_report,
    write_json_report,
    write_report,
)


def sample_metrics():
    per_bug = {
        "b02": {"crashes": 40, "fault_sig_count": 2, "group_count": 1,
                "correct": 39, "incorrect": 0, "missed": 1},
        "b01": {"crashes": 25, "fault_sig_count": 1, "group_count": 1,
                "correct": 25, "incorrect": 0, "missed": 0},
    }
    totals = {f: sum(row[f] for row in per_bug.values()) for f in ROW_FIELDS}
    return Metrics(per_bug=per_bug, totals=totals, unknown_crashes=3)


def test_rows_are_sorted_and_end_with_total():
    rows = report_rows(sample_metrics())
    assert [name for name, _ in rows] == ["b01", "b02", "TOTAL"]
    _, total = rows[-1]
    assert [total[f] for f in ROW_FIELDS] == [65, 3, 2, 64, 0, 1]


def test_json_and_csv_agree_on_every_number(tmp_path):
    m = sample_metrics()
    jpath = tmp_path / "report.json"
    cpath = tmp_path / "report.csv"
    write_json_report(jpath, m)
    write_csv_report(cpath, m)

    doc = json.loads(jpath.read_text())
    assert doc["unknown_crashes"] == 3

    with open(cpath, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        assert header == ["bug"] + list(ROW_FIELDS)
        by_bug = {row[0]: [int(x) for x in row[1:]] for row in reader}

    for bug, row in doc["per_bug"].items():
        assert by_bug[bug] == [row[f] for f in ROW_FIELDS]
    assert by_bug["TOTAL"] == [doc["totals"][f] for f in ROW_FIELDS]


def test_write_report_emits_table_and_figure(tmp_path):
    paths = write_report(tmp_path, sample_metrics(), fmt="json")
    names = sorted(p.name for p in paths)
    assert names == ["fig_per_bug.png", "report.json"]
    for p in paths:
        assert p.exists() and p.stat().st_size > 0
    # PNG magic on the figure file.
    png = tmp_path / "fig_per_bug.png"
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_write_report_csv_format(tmp_path):
    paths = write_report(tmp_path, sample_metrics(), fmt="csv")
    assert sorted(p.name for p in paths) == ["fig_per_bug.png", "report.csv"]


def test_strategy_figure_written_when_counts_given(tmp_path):
    counts = {"signature": 2, "coverage": 57, "stack:1": 2, "site": 2}
    paths = write_report(tmp_path, sample_metrics(), fmt="json", strategy_counts=counts)
    assert (tmp_path / "fig_groups_by_strategy.png").exists()
    assert (tmp_path / "fig_groups_by_strategy.png") in paths


def test_unknown_format_is_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_report(tmp_path, sample_metrics(), fmt="tsv")


def test_report_files_are_byte_deterministic(tmp_path):
    m = sample_metrics()
    counts = {"signature": 2, "coverage": 57}
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    write_report(a, m, fmt="json", strategy_counts=counts)
    write_report(b, m, fmt="json", strategy_counts=counts)
    for name in ("report.json", "fig_per_bug.png", "fig_groups_by_strategy.png"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_figure_renderers_accept_single_bug(tmp_path):
    per_bug = {"b01": dict.fromkeys(ROW_FIELDS, 1)}
    m = Metrics(per_bug=per_bug, totals=dict(per_bug["b01"]), unknown_crashes=0)
    render_outcome_figure(tmp_path / "one.png", m)
    render_strategy_figure(tmp_path / "strat.png", {"signature": 1})
    assert (tmp_path / "one.png").exists()
    assert (tmp_path / "strat.png").exists()
