"""From one crashing input to a fault signature.

The pipeline is: execute the original program to capture the trace, keep only
the functions the trace touched (plus globals and main), then hand that slice
to the reducer.  The surviving program is the signature; running it on the
originating input yields the reference fingerprint that later classification
compares against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import NotACrash, SliceNotReproducing
from .minilang import parse
from .minilang.interp import DEFAULT_STEP_BUDGET, ExecutionStatus, execute
from .minilang.nodes import FailureFingerprint, Program
from .reduction import DEFAULT_MAX_ORACLE_RUNS, reduce


@dataclass
class FaultSignature:
    """A minimized crashing program standing in for one failure cause.

    origin_input is the crashing input the signature was built from; it is
    persisted with the signature so a store can be re-validated (and reused
    against fresh corpora) without the original corpus directory.
    """

    id: str
    program: Program
    origin_crash: str
    reference_fingerprint: FailureFingerprint
    members: set = field(default_factory=set)
    minimal: bool = True
    oracle_runs: int = 0
    origin_input: bytes = b""

    def __post_init__(self):
        self.members = set(self.members)
        self.members.add(self.origin_crash)

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "origin_crash": self.origin_crash,
            "origin_input_hex": self.origin_input.hex(),
            "reference_fingerprint": self.reference_fingerprint.to_json_dict(),
            "members": sorted(self.members),
            "minimal": self.minimal,
            "oracle_runs": self.oracle_runs,
        }


def slice_program(original: Program, trace) -> Program:
    """Keep the functions the trace touched, all globals, and main."""
    touched = {sid.function for sid in trace}
    touched.add("main")
    functions = [f for f in original.functions if f.name in touched]
    return Program(list(original.globals), functions)


def generate_signature(
    original: Program,
    crash_input: bytes,
    *,
    sig_id: str = "0001",
    crash_id: str = "crash",
    step_budget: int = DEFAULT_STEP_BUDGET,
    max_oracle_runs: int = DEFAULT_MAX_ORACLE_RUNS,
) -> FaultSignature:
    """Slice and reduce one crash into a FaultSignature.

    Raises NotACrash when the input does not crash the original program, and
    SliceNotReproducing if the function-level slice loses the failure (which
    would mean the slicer or interpreter is broken, so nothing is saved).
    """
    out = execute(original, crash_input, step_budget)
    if out.status is not ExecutionStatus.CRASHED:
        raise NotACrash(f"input produced {out.status.value}, not a crash")

    sliced = slice_program(original, out.trace)
    check = execute(sliced, crash_input, step_budget)
    # whole functions keep their internal line numbering, so the fingerprint
    # must carry over exactly
    if check.status is not ExecutionStatus.CRASHED or check.fingerprint != out.fingerprint:
        raise SliceNotReproducing(
            f"slice failed to reproduce {out.fingerprint.kind} at "
            f"{out.fingerprint.location.function}:{out.fingerprint.location.line}"
        )

    # Candidates that delete a loop increment spin until the step budget runs
    # out, so give the oracle a budget scaled to the origin trace instead of
    # the full interpreter allowance.  Anything reproducing the crash finishes
    # well inside ten times the original step count.
    oracle_budget = min(step_budget, max(1000, 10 * len(out.trace)))
    result = reduce(sliced, crash_input, out.fingerprint, oracle_budget, max_oracle_runs)
    final = execute(result.program, crash_input, step_budget)
    return FaultSignature(
        id=sig_id,
        program=result.program,
        origin_crash=crash_id,
        reference_fingerprint=final.fingerprint,
        members={crash_id},
        minimal=result.minimal,
        oracle_runs=result.oracle_runs,
        origin_input=bytes(crash_input),
    )


# ---------------------------------------------------------------------------
# signature store
# ---------------------------------------------------------------------------


def save_signature(directory, sig: FaultSignature) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"sig_{sig.id}.ml-src").write_text(sig.program.canonical_text)
    payload = json.dumps(sig.to_json_dict(), indent=2, sort_keys=True) + "\n"
    (directory / f"sig_{sig.id}.json").write_text(payload)


def load_signature(directory, sig_id: str) -> FaultSignature:
    directory = Path(directory)
    meta = json.loads((directory / f"sig_{sig_id}.json").read_text())
    program = parse((directory / f"sig_{sig_id}.ml-src").read_text(), require_main=True)
    return FaultSignature(
        id=meta["id"],
        program=program,
        origin_crash=meta["origin_crash"],
        reference_fingerprint=FailureFingerprint.from_json_dict(meta["reference_fingerprint"]),
        members=set(meta["members"]),
        minimal=meta["minimal"],
        oracle_runs=meta["oracle_runs"],
        origin_input=bytes.fromhex(meta["origin_input_hex"]),
    )


def list_signatures(directory) -> list:
    directory = Path(directory)
    ids = sorted(p.stem[len("sig_"):] for p in directory.glob("sig_*.json"))
    return [load_signature(directory, sig_id) for sig_id in ids]
