"""Baseline dedup strategies: coverage set cover, stack hash, crash site."""

import random

import pytest

from fuzzeraid.baselines import dedup_coverage, dedup_crash_site, dedup_stack_hash
from fuzzeraid.minilang import parse
from fuzzeraid.triage import CrashRecord

BRANCHY = """
fn bug() { ptr p; *p = 1; }
fn main() {
  array[3] buf;
  buf[0] = input(0);
  buf[1] = input(1);
  buf[2] = input(2);
  if (buf[0] == 'a') { bug(); } else { bug(); }
}
"""

# crashes progressively deeper along one straight path; later crashes cover a
# strict superset of the edges of earlier ones
STAIRCASE = """
fn main() {
  a = input(0);
  x = 1;
  y = 2;
  b = 1 / (a - 2);
  c = 3;
  d = 1 / (a - 3);
  e = 4;
  f = 1 / 0;
}
"""

# one call chain, two crash sites inside the same function
TWO_SITES = """
fn f() {
  if (input(0) == 'a') {
    ptr p;
    *p = 1;
  }
  ptr q;
  *q = 2;
}
fn main() {
  f();
}
"""


def members_of(report):
    return sorted(cid for g in report.groups for cid in g["members"])


def assert_partitions(report, corpus):
    assert members_of(report) == sorted(c.id for c in corpus)
    assert report.group_count == len(report.groups)


# ---------------------------------------------------------------------------
# coverage (AFL analog)
# ---------------------------------------------------------------------------


def test_branch_flavors_of_one_bug_split_into_two_coverage_groups():
    p = parse(BRANCHY, require_main=True)
    corpus = [CrashRecord("crash_0001", b"axx"), CrashRecord("crash_0002", b"zxx")]
    report = dedup_coverage(corpus, p)
    assert report.group_count == 2
    assert_partitions(report, corpus)


def test_identical_inputs_collapse_to_one_coverage_group():
    p = parse(BRANCHY, require_main=True)
    corpus = [CrashRecord(f"crash_{i:04d}", b"axx") for i in range(1, 5)]
    report = dedup_coverage(corpus, p)
    assert report.group_count == 1
    assert report.groups[0]["representative"] == "crash_0001"
    assert_partitions(report, corpus)


def test_nested_coverage_chain_yields_a_single_representative():
    p = parse(STAIRCASE, require_main=True)
    corpus = [
        CrashRecord("c1", bytes([9])),  # crashes at the very end
        CrashRecord("c2", bytes([3])),  # crashes midway
        CrashRecord("c3", bytes([2])),  # crashes earliest
    ]
    report = dedup_coverage(corpus, p)
    assert report.group_count == 1
    assert report.groups[0]["representative"] == "c1"
    assert sorted(report.groups[0]["members"]) == ["c1", "c2", "c3"]


def test_coverage_ties_break_toward_the_lower_crash_id():
    p = parse(BRANCHY, require_main=True)
    corpus = [CrashRecord("crash_0002", b"axx"), CrashRecord("crash_0001", b"ayy")]
    report = dedup_coverage(corpus, p)
    # identical coverage either way; the lower id must come out on top
    assert report.groups[0]["representative"] == "crash_0001"


# ---------------------------------------------------------------------------
# stack hash (BFF analog)
# ---------------------------------------------------------------------------


def test_stack_hash_ignores_line_numbers_within_functions():
    p = parse(TWO_SITES, require_main=True)
    corpus = [CrashRecord("c1", b"a"), CrashRecord("c2", b"z")]
    by_stack = dedup_stack_hash(corpus, p, 5)
    assert by_stack.group_count == 1
    by_site = dedup_crash_site(corpus, p)
    assert by_site.group_count == 2


def test_stack_hash_full_depth_equals_whole_stack_keying():
    p = parse(BRANCHY, require_main=True)
    corpus = [CrashRecord("c1", b"axx"), CrashRecord("c2", b"zxx")]
    deep = dedup_stack_hash(corpus, p, 99)
    shallow = dedup_stack_hash(corpus, p, 1)
    # same functions on both paths: stack names are (main, bug) either way
    assert deep.group_count == 1
    assert shallow.group_count == 1


def test_stack_hash_rejects_zero_frames():
    p = parse(BRANCHY, require_main=True)
    with pytest.raises(ValueError):
        dedup_stack_hash([CrashRecord("c1", b"axx")], p, 0)


def test_full_depth_stack_hash_refines_one_frame():
    rng = random.Random(99)
    p = parse(STAIRCASE, require_main=True)
    corpus = [
        CrashRecord(f"c{i}", bytes([rng.choice([2, 3, 9])])) for i in range(12)
    ]
    fine = dedup_stack_hash(corpus, p, 99)
    coarse = dedup_stack_hash(corpus, p, 1)
    coarse_of = {}
    for g in coarse.groups:
        for cid in g["members"]:
            coarse_of[cid] = g["representative"]
    for g in fine.groups:
        anchors = {coarse_of[cid] for cid in g["members"]}
        assert len(anchors) == 1  # every fine group sits inside a coarse one
    assert_partitions(fine, corpus)
    assert_partitions(coarse, corpus)


# ---------------------------------------------------------------------------
# crash site (Honggfuzz analog)
# ---------------------------------------------------------------------------


def test_same_site_same_group_different_kind_different_group():
    src = """
    fn main() {
      k = input(0);
      array[3] t;
      if (k == 'd') { int z; q = 1 / z; }
      t[5] = 1;
    }
    """
    p = parse(src, require_main=True)
    same = [CrashRecord("c1", b"x"), CrashRecord("c2", b"y")]
    report = dedup_crash_site(same, p)
    assert report.group_count == 1

    mixed = [CrashRecord("c1", b"x"), CrashRecord("c2", b"d")]
    report = dedup_crash_site(mixed, p)
    assert report.group_count == 2


def test_reports_are_deterministic_and_serializable():
    p = parse(STAIRCASE, require_main=True)
    corpus = [
        CrashRecord("c1", bytes([9])),
        CrashRecord("c2", bytes([3])),
        CrashRecord("c3", bytes([2])),
    ]
    import json
    a = json.dumps(dedup_coverage(corpus, p).to_json_dict(), sort_keys=True)
    b = json.dumps(dedup_coverage(corpus, p).to_json_dict(), sort_keys=True)
    assert a == b
    for report in (dedup_stack_hash(corpus, p, 5), dedup_crash_site(corpus, p)):
        d = report.to_json_dict()
        assert d["group_count"] == len(d["groups"])
