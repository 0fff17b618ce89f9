"""Crash corpus generation, patch-based ground truth, and scoring.

explore() is a miniature crash-exploration fuzzer: it mutates known-crashing
inputs and keeps every mutant that still crashes, feeding mutants that reach
new (edge, bucket) coverage back into the mutation queue.  Ground truth comes
from patched program variants: a crash belongs to the one bug whose patch
makes it stop crashing.  score() then compares fault groups against those
labels the way a triage benchmark would.
"""

from __future__ import annotations

import json
import logging
import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import LabelMissing, SeedNotCrashing
from .minilang.interp import DEFAULT_STEP_BUDGET, ExecutionStatus, bucket_edges, execute
from .minilang.nodes import FailureFingerprint, Program
from .triage import CrashRecord

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# exploration
# ---------------------------------------------------------------------------

_OPERATORS = ("flip", "substitute", "truncate", "extend", "splice")


def _mutate(base: bytes, rng: random.Random, queue) -> bytes:
    op = rng.choice(_OPERATORS)
    if not base and op in ("flip", "substitute", "truncate"):
        op = "extend"  # nothing to edit in an empty input
    if op == "flip":
        i = rng.randrange(len(base))
        return base[:i] + bytes([base[i] ^ (1 << rng.randrange(8))]) + base[i + 1:]
    if op == "substitute":
        i = rng.randrange(len(base))
        return base[:i] + bytes([rng.randrange(256)]) + base[i + 1:]
    if op == "truncate":
        return base[: rng.randrange(len(base))]
    if op == "extend":
        return base + bytes(rng.randrange(256) for _ in range(rng.randint(1, 4)))
    other = rng.choice(queue)
    cut_a = rng.randint(0, len(base))
    cut_b = rng.randint(0, len(other))
    return base[:cut_a] + other[cut_b:]


def explore(original: Program, seed_input: bytes, iterations: int, rng_seed: int,
            step_budget: int = DEFAULT_STEP_BUDGET):
    """Grow a crash corpus from one crashing seed.

    Every kept record crashes the program; inputs are unique; ids are
    assigned in discovery order.  The whole run is a pure function of the
    arguments.
    """
    seed_input = bytes(seed_input)
    out = execute(original, seed_input, step_budget)
    if out.status is not ExecutionStatus.CRASHED:
        raise SeedNotCrashing(
            f"seed input does not crash program (produced {out.status.value})"
        )

    queue = [seed_input]
    seen_coverage = set(bucket_edges(out.edges))
    found = {seed_input: out.fingerprint}
    rng = random.Random(rng_seed)
    for _ in range(iterations):
        base = rng.choice(queue)
        mutant = _mutate(base, rng, queue)
        if mutant in found:
            continue
        result = execute(original, mutant, step_budget)
        if result.status is not ExecutionStatus.CRASHED:
            continue
        found[mutant] = result.fingerprint
        novel = set(bucket_edges(result.edges)) - seen_coverage
        if novel:
            seen_coverage |= novel
            queue.append(mutant)

    return [
        CrashRecord(id=f"crash_{i:04d}", input=data, original_fingerprint=fp)
        for i, (data, fp) in enumerate(found.items(), start=1)
    ]


def renumber(records) -> list:
    """Re-assign sequential crash ids (after merging several corpora)."""
    return [
        CrashRecord(id=f"crash_{i:04d}", input=r.input,
                    original_fingerprint=r.original_fingerprint, label=r.label)
        for i, r in enumerate(records, start=1)
    ]


def cap_per_group(records, key_of, cap: int, rng_seed: int):
    """Keep at most `cap` records per key, sampled reproducibly.

    key_of maps a record to its balancing key (typically the bug label or
    the seed it was explored from).
    """
    rng = random.Random(rng_seed)
    buckets = {}
    for r in records:
        buckets.setdefault(key_of(r), []).append(r)
    kept = set()
    for key in sorted(buckets, key=str):
        group = buckets[key]
        chosen = group if len(group) <= cap else rng.sample(group, cap)
        kept.update(id(r) for r in chosen)
    return [r for r in records if id(r) in kept]


# ---------------------------------------------------------------------------
# ground truth via patches
# ---------------------------------------------------------------------------


@dataclass
class GroundTruthLabel:
    crash_id: str
    bug_id: Optional[str]  # None means unknown

    def to_json_dict(self) -> dict:
        return {"crash_id": self.crash_id, "bug_id": self.bug_id}


def label_with_patches(corpus, original: Program, patches: dict,
                       step_budget: int = DEFAULT_STEP_BUDGET):
    """Attribute each crash to the unique bug whose patch eliminates it.

    A patch eliminates a crash when the patched program no longer crashes on
    that input (a run that merely crashes differently still counts as
    crashing).  Zero or several eliminating patches mean the ground truth is
    unknown.
    """
    labels = []
    for crash in corpus:
        killers = []
        for bug_id in sorted(patches):
            patched = execute(patches[bug_id], crash.input, step_budget)
            if patched.status is not ExecutionStatus.CRASHED:
                killers.append(bug_id)
        if len(killers) == 1:
            labels.append(GroundTruthLabel(crash.id, killers[0]))
        else:
            if len(killers) > 1:
                log.warning(
                    "crash %s eliminated by several patches (%s); labeling unknown",
                    crash.id, ", ".join(killers),
                )
            labels.append(GroundTruthLabel(crash.id, None))
    return labels


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------

_ROW_FIELDS = ("crashes", "fault_sig_count", "group_count", "correct", "incorrect", "missed")


@dataclass
class Metrics:
    per_bug: dict
    totals: dict
    unknown_crashes: int = 0

    def to_json_dict(self) -> dict:
        return {
            "per_bug": {bug: dict(row) for bug, row in sorted(self.per_bug.items())},
            "totals": dict(self.totals),
            "unknown_crashes": self.unknown_crashes,
        }


def _attribute(group_members, label_of) -> Optional[str]:
    votes = Counter(
        label_of[cid] for cid in group_members if label_of[cid] is not None
    )
    if not votes:
        return None
    top = max(votes.values())
    return min(bug for bug, n in votes.items() if n == top)


def score(groups, labels, missed) -> Metrics:
    """Compare fault groups against ground truth.

    Each group is attributed to the majority bug among its labeled members
    (ties to the lower bug id).  A labeled crash is correct when its group is
    attributed to its own bug, incorrect when the group went to another bug
    or to no bug, and missed when grouping skipped it entirely.
    """
    label_of = {l.crash_id: l.bug_id for l in labels}
    missed_ids = [m["crash_id"] if isinstance(m, dict) else m for m in missed]

    scored_ids = list(missed_ids)
    for g in groups:
        scored_ids.extend(g.crash_ids)
    unlabeled = [cid for cid in scored_ids if cid not in label_of]
    if unlabeled:
        raise LabelMissing(f"no ground-truth label for: {', '.join(sorted(unlabeled))}")

    bugs = sorted({b for b in (label_of[cid] for cid in scored_ids) if b is not None})
    per_bug = {b: dict.fromkeys(_ROW_FIELDS, 0) for b in bugs}
    unknown = 0

    for cid in scored_ids:
        b = label_of[cid]
        if b is None:
            unknown += 1
        else:
            per_bug[b]["crashes"] += 1
    for cid in missed_ids:
        b = label_of[cid]
        if b is not None:
            per_bug[b]["missed"] += 1

    for g in groups:
        owner = _attribute(g.crash_ids, label_of)
        if owner is not None:
            per_bug[owner]["group_count"] += 1
            per_bug[owner]["fault_sig_count"] += len(g.signature_ids)
        for cid in sorted(g.crash_ids):
            b = label_of[cid]
            if b is None:
                continue
            if b == owner:
                per_bug[b]["correct"] += 1
            else:
                per_bug[b]["incorrect"] += 1

    totals = dict.fromkeys(_ROW_FIELDS, 0)
    for row in per_bug.values():
        for k in _ROW_FIELDS:
            totals[k] += row[k]
    return Metrics(per_bug=per_bug, totals=totals, unknown_crashes=unknown)


# ---------------------------------------------------------------------------
# corpus directory layout
# ---------------------------------------------------------------------------


def save_corpus(directory, records, labels=None) -> None:
    """Write inputs/<id>.bin files plus manifest.json (and labels.json)."""
    directory = Path(directory)
    (directory / "inputs").mkdir(parents=True, exist_ok=True)
    manifest = []
    label_of = {l.crash_id: l.bug_id for l in labels} if labels else {}
    for r in records:
        rel = f"inputs/{r.id}.bin"
        (directory / rel).write_bytes(r.input)
        entry = {
            "id": r.id,
            "file": rel,
            "original_fingerprint": (
                r.original_fingerprint.to_json_dict() if r.original_fingerprint else None
            ),
        }
        if r.id in label_of:
            entry["label"] = label_of[r.id]
        elif r.label is not None:
            entry["label"] = r.label
        manifest.append(entry)
    payload = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    (directory / "manifest.json").write_text(payload)
    if labels is not None:
        body = json.dumps([l.to_json_dict() for l in labels], indent=2, sort_keys=True) + "\n"
        (directory / "labels.json").write_text(body)


def load_corpus(directory):
    """Read a corpus directory back into CrashRecord objects."""
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    records = []
    for entry in manifest:
        fp = entry.get("original_fingerprint")
        records.append(CrashRecord(
            id=entry["id"],
            input=(directory / entry["file"]).read_bytes(),
            original_fingerprint=FailureFingerprint.from_json_dict(fp) if fp else None,
            label=entry.get("label"),
        ))
    return records


def load_labels(path):
    data = json.loads(Path(path).read_text())
    return [GroundTruthLabel(d["crash_id"], d["bug_id"]) for d in data]
