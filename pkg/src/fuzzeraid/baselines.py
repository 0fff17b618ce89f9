"""The three conventional dedup strategies signatures are compared against.

All three look only at a single execution of each crash on the original
program: AFL-style coverage set cover over bucketed edge counts, stack
hashing over the innermost N frame function names, and crash-site keying on
(failure kind, crashing statement, innermost 7 function names).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .minilang.interp import ExecutionStatus, bucket_edges, execute
from .minilang.nodes import Program
from .triage import TriageConfig


@dataclass
class DedupReport:
    strategy: str
    groups: list  # [{"representative": crash id, "members": [crash ids]}]

    @property
    def group_count(self) -> int:
        return len(self.groups)

    def to_json_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "group_count": self.group_count,
            "groups": [
                {"representative": g["representative"], "members": sorted(g["members"])}
                for g in self.groups
            ],
        }


def _fingerprint(crash, original: Program, step_budget: int):
    if crash.original_fingerprint is not None:
        return crash.original_fingerprint
    out = execute(original, crash.input, step_budget)
    if out.status is not ExecutionStatus.CRASHED:
        raise ValueError(f"crash {crash.id} does not crash the program")
    return out.fingerprint


def dedup_coverage(corpus, original: Program, config: Optional[TriageConfig] = None) -> DedupReport:
    """AFL-style dedup: greedy set cover over bucketed (edge, count) points.

    Selected crashes are representatives.  Every unselected crash joins the
    first representative whose coverage contains its own; a crash contained
    in no single representative forms its own group.
    """
    config = config or TriageConfig()
    coverage = {}
    for crash in corpus:
        out = execute(original, crash.input, config.step_budget)
        coverage[crash.id] = bucket_edges(out.edges)

    order = [c.id for c in corpus]
    uncovered = set()
    for points in coverage.values():
        uncovered |= points
    selected = []
    remaining = list(order)
    while uncovered and remaining:
        best = min(remaining, key=lambda cid: (-len(coverage[cid] & uncovered), cid))
        if not coverage[best] & uncovered:
            break
        selected.append(best)
        remaining.remove(best)
        uncovered -= coverage[best]

    groups = [{"representative": rep, "members": [rep]} for rep in selected]
    leftovers = []
    for cid in order:
        if cid in selected:
            continue
        for g in groups[: len(selected)]:
            if coverage[cid] <= coverage[g["representative"]]:
                g["members"].append(cid)
                break
        else:
            leftovers.append({"representative": cid, "members": [cid]})
    return DedupReport(strategy="afl", groups=groups + leftovers)


def _group_by_key(corpus, keys, strategy: str) -> DedupReport:
    groups = []
    index = {}
    for crash in corpus:
        key = keys[crash.id]
        if key in index:
            index[key]["members"].append(crash.id)
        else:
            group = {"representative": crash.id, "members": [crash.id]}
            index[key] = group
            groups.append(group)
    return DedupReport(strategy=strategy, groups=groups)


def dedup_stack_hash(corpus, original: Program, n_frames: int,
                     config: Optional[TriageConfig] = None) -> DedupReport:
    """Group by the innermost min(n_frames, depth) stack function names."""
    if n_frames < 1:
        raise ValueError("n_frames must be at least 1")
    config = config or TriageConfig()
    keys = {}
    for crash in corpus:
        fp = _fingerprint(crash, original, config.step_budget)
        keys[crash.id] = tuple(f.function for f in fp.stack[-n_frames:])
    return _group_by_key(corpus, keys, f"stack:{n_frames}")


def dedup_crash_site(corpus, original: Program,
                     config: Optional[TriageConfig] = None) -> DedupReport:
    """Group by (failure kind, crashing statement, innermost 7 functions)."""
    config = config or TriageConfig()
    keys = {}
    for crash in corpus:
        fp = _fingerprint(crash, original, config.step_budget)
        keys[crash.id] = (
            fp.kind,
            fp.location,
            tuple(f.function for f in fp.stack[-7:]),
        )
    return _group_by_key(corpus, keys, "site")
