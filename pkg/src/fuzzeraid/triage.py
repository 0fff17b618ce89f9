"""Crash classification and signature merging.

A crash is classified by replaying its input against each known signature in
creation order; the first signature that reproduces its own reference
fingerprint claims the crash.  Unclaimed crashes get a fresh signature.
Signatures are then clustered into fault groups by a greedy worklist: the
similarity score is the mean of a line-level edit-distance similarity over
the canonical renderings and a shared-function similarity over the crashing
call stacks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import FuzzeraidError
from .minilang.errors import MiniLangRuntimeError
from .minilang.interp import ExecutionStatus, execute
from .minilang.nodes import FailureFingerprint, Program
from .siggen import FaultSignature, generate_signature


@dataclass
class TriageConfig:
    """Knobs for grouping.

    retries is honored for classification attempts; with the deterministic
    interpreter the first attempt already decides, so extra attempts are
    reserved for nondeterministic execution backends.  edit_unit selects the
    granularity of the signature edit distance ("lines" or "chars").
    """

    threshold: float = 0.7
    step_budget: int = 1_000_000
    retries: int = 10
    edit_cost: int = 1
    edit_unit: str = "lines"
    max_oracle_runs: int = 10_000


@dataclass
class CrashRecord:
    id: str
    input: bytes
    original_fingerprint: Optional[FailureFingerprint] = None
    label: Optional[str] = None


@dataclass
class FaultGroup:
    id: str
    signature_ids: list
    crash_ids: set = field(default_factory=set)

    def to_json_dict(self) -> dict:
        return {
            "group_id": self.id,
            "signature_ids": list(self.signature_ids),
            "crash_ids": sorted(self.crash_ids),
        }


# ---------------------------------------------------------------------------
# similarity
# ---------------------------------------------------------------------------


def levenshtein(a, b, cost: int = 1) -> int:
    """Edit distance between two sequences, same cost for every operation."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(0, (len(b) + 1) * cost, cost))
    for i, x in enumerate(a, start=1):
        cur = [i * cost]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1])
            else:
                cur.append(cost + min(prev[j - 1], prev[j], cur[-1]))
        prev = cur
    return prev[-1]


def _edit_units(sig: FaultSignature, unit: str):
    text = sig.program.canonical_text
    if unit == "chars":
        return text
    return text.splitlines()


def sim_sig(s1: FaultSignature, s2: FaultSignature, config: Optional[TriageConfig] = None) -> float:
    """Textual similarity: (MAXSize - LDistance) / MAXSize over renderings."""
    config = config or TriageConfig()
    a = _edit_units(s1, config.edit_unit)
    b = _edit_units(s2, config.edit_unit)
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    d = levenshtein(a, b, config.edit_cost)
    return max(0.0, (longest - d) / longest)


def sim_call(cs1, cs2) -> float:
    """Shared-function similarity between two call stacks.

    Function names are counted as a set (recursion collapses), normalized by
    the longer stack's frame count.
    """
    longest = max(len(cs1), len(cs2))
    if longest == 0:
        return 1.0
    shared = {f.function for f in cs1} & {f.function for f in cs2}
    return len(shared) / longest


def sim_score(s1: FaultSignature, s2: FaultSignature, config: Optional[TriageConfig] = None) -> float:
    return (
        sim_sig(s1, s2, config)
        + sim_call(s1.reference_fingerprint.stack, s2.reference_fingerprint.stack)
    ) / 2


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


def classify(crash: CrashRecord, signatures, config: Optional[TriageConfig] = None) -> Optional[str]:
    """First signature (in creation order) that reproduces on crash.input.

    Returns the signature id, or None when nothing matches.  A run that
    exhausts the step budget, completes, or trips a host error is a
    non-match.  One attempt per signature suffices because execution is
    deterministic; config.retries exists for future nondeterministic
    backends.
    """
    config = config or TriageConfig()
    for sig in signatures:
        try:
            out = execute(sig.program, crash.input, config.step_budget)
        except MiniLangRuntimeError:
            continue
        if out.status is ExecutionStatus.CRASHED and out.fingerprint == sig.reference_fingerprint:
            return sig.id
    return None


def _next_sig_id(signatures) -> str:
    highest = 0
    for sig in signatures:
        try:
            highest = max(highest, int(sig.id))
        except ValueError:
            continue
    return f"{highest + 1:04d}"


def group_crashes(corpus, seed_signatures, original: Program,
                  config: Optional[TriageConfig] = None):
    """Assign every crash to a signature, generating new ones as needed.

    Returns (signatures, missed, assignment).  missed is a list of
    {"crash_id", "reason"} entries for crashes whose signature generation
    failed even after a retry.  assignment maps this corpus's crash ids to
    signature ids; signature members accumulate across runs (a seed
    signature keeps the members it arrived with), so run-scoped outputs
    must be built from assignment, not members.
    """
    config = config or TriageConfig()
    signatures = list(seed_signatures)
    missed = []
    assignment = {}
    for crash in corpus:
        matched = classify(crash, signatures, config)
        if matched is not None:
            next(s for s in signatures if s.id == matched).members.add(crash.id)
            assignment[crash.id] = matched
            continue
        sig = None
        reason = ""
        for _attempt in range(2):  # one retry, then give up on the crash
            try:
                sig = generate_signature(
                    original,
                    crash.input,
                    sig_id=_next_sig_id(signatures),
                    crash_id=crash.id,
                    step_budget=config.step_budget,
                    max_oracle_runs=config.max_oracle_runs,
                )
                break
            except (FuzzeraidError, MiniLangRuntimeError) as exc:
                reason = f"{type(exc).__name__}: {exc}"
        if sig is None:
            missed.append({"crash_id": crash.id, "reason": reason})
        else:
            signatures.append(sig)
            assignment[crash.id] = sig.id
    return signatures, missed, assignment


# ---------------------------------------------------------------------------
# merging
# ---------------------------------------------------------------------------


def merge_groups(signatures, config: Optional[TriageConfig] = None):
    """Greedy worklist clustering of signatures into fault groups.

    The first worklist signature seeds a group and pulls in every remaining
    signature scoring at or above the threshold against the seed (the seed,
    not the group: membership is seed-relative and deliberately
    non-transitive).
    """
    config = config or TriageConfig()
    worklist = list(signatures)
    groups = []
    while worklist:
        seed = worklist.pop(0)
        taken = [seed]
        rest = []
        for other in worklist:
            if sim_score(seed, other, config) >= config.threshold:
                taken.append(other)
            else:
                rest.append(other)
        worklist = rest
        members = set()
        for sig in taken:
            members |= sig.members
        groups.append(FaultGroup(
            id=f"g{len(groups) + 1:04d}",
            signature_ids=[s.id for s in taken],
            crash_ids=members,
        ))
    return groups
