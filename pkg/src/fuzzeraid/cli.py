"""Command line front end.

Subcommands cover the whole pipeline: `explore` grows a crash corpus from
seeds (optionally labeling it against patched programs), `group` turns the
corpus into fault signatures and merged groups, `baseline` runs the
comparison dedupers, `report` scores groups against labels and renders
tables plus figures, and `validate` re-checks every invariant of a stored
signature set.

Exit codes: 0 success, 1 domain failure (bad corpus, seed that does not
crash, missing labels, failed validation), 2 usage error.  All outputs are
byte-deterministic for fixed flags; FUZZERAID_SEED overrides any --rng flag
so CI can pin runs globally.
"""

from __future__ import annotations

import argparse
import json
import logging
import multiprocessing
import os
import sys
from functools import partial
from pathlib import Path

from .baselines import dedup_coverage, dedup_crash_site, dedup_stack_hash
from .corpus import (
    cap_per_group,
    explore,
    label_with_patches,
    load_corpus,
    load_labels,
    renumber,
    save_corpus,
    score,
)
from .errors import FuzzeraidError
from .minilang import parse
from .minilang.errors import MiniLangError
from .minilang.interp import ExecutionStatus, execute
from .reduction import (
    all_uids,
    fingerprint_remap,
    materialize,
    normalize_keep_set,
    removable_uids,
)
from .reporting import write_report
from .siggen import list_signatures, save_signature
from .triage import FaultGroup, TriageConfig, group_crashes, merge_groups

DEFAULT_STEP_BUDGET = 1_000_000


def _rng_seed(args) -> int:
    env = os.environ.get("FUZZERAID_SEED")
    if env is not None:
        return int(env)
    return args.rng


def _load_program(path):
    return parse(Path(path).read_text(), require_main=True)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _recheck_crash(program, step_budget, record):
    out = execute(program, record.input, step_budget)
    return record.id, out.status, out.fingerprint


def _mode(value: str) -> str:
    if value in ("afl", "site"):
        return value
    if value.startswith("stack:"):
        try:
            n = int(value.split(":", 1)[1])
        except ValueError:
            n = 0
        if n >= 1:
            return value
    raise argparse.ArgumentTypeError(
        f"invalid mode {value!r} (expected afl, stack:N, or site)"
    )


# ---------------------------------------------------------------------------
# explore
# ---------------------------------------------------------------------------


def cmd_explore(args) -> int:
    program = _load_program(args.program)
    rng_seed = _rng_seed(args)
    records = []
    seen = set()
    for idx, seed_path in enumerate(args.seed_input):
        seed = Path(seed_path).read_bytes()
        part = explore(program, seed, iterations=args.iters,
                       rng_seed=rng_seed + idx, step_budget=args.step_budget)
        for rec in part:
            if rec.input in seen:
                continue
            seen.add(rec.input)
            records.append(rec)
    records = renumber(records)

    labels = None
    if args.patches is not None:
        patch_dir = Path(args.patches)
        patches = {
            p.stem: parse(p.read_text(), require_main=True)
            for p in sorted(patch_dir.glob("*.ml-src"))
        }
        if not patches:
            print(f"error: no *.ml-src patches under {patch_dir}", file=sys.stderr)
            return 1
        labels = label_with_patches(records, program, patches,
                                    step_budget=args.step_budget)

    save_corpus(args.out, records, labels)
    labeled = sum(1 for l in labels if l.bug_id is not None) if labels else 0
    tail = f", {labeled} labeled" if labels is not None else ""
    print(f"explored {len(records)} crashes from {len(args.seed_input)} seed(s){tail} -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# group
# ---------------------------------------------------------------------------


def _verify_corpus(program, records, step_budget: int, jobs: int):
    """Every corpus input must still crash the program it claims to crash."""
    checker = partial(_recheck_crash, program, step_budget)
    if jobs > 1:
        with multiprocessing.Pool(jobs) as pool:
            results = pool.map(checker, records)
    else:
        results = [checker(r) for r in records]
    by_id = {r.id: r for r in records}
    for crash_id, status, fingerprint in results:
        if status is not ExecutionStatus.CRASHED:
            return f"corpus input {crash_id} does not crash the program ({status.value})"
        recorded = by_id[crash_id].original_fingerprint
        if recorded is not None and recorded != fingerprint:
            return f"corpus fingerprint mismatch for {crash_id} (wrong program?)"
    return None


def cmd_group(args) -> int:
    program = _load_program(args.program)
    corpus_dir = Path(args.corpus)
    records = load_corpus(corpus_dir)
    labels = None
    labels_path = corpus_dir / "labels.json"
    if labels_path.exists():
        labels = load_labels(labels_path)

    if args.per_bug_cap > 0 and labels is not None:
        label_of = {l.crash_id: l.bug_id for l in labels}
        records = cap_per_group(records, lambda r: label_of.get(r.id),
                                args.per_bug_cap, _rng_seed(args))
        kept_ids = {r.id for r in records}
        labels = [l for l in labels if l.crash_id in kept_ids]

    problem = _verify_corpus(program, records, args.step_budget, args.jobs)
    if problem is not None:
        print(f"error: {problem}", file=sys.stderr)
        return 1

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_corpus(out_dir / "corpus_used", records, labels)

    seed_sigs = []
    if args.seed_signatures is not None:
        seed_sigs = list_signatures(args.seed_signatures)
    config = TriageConfig(threshold=args.threshold, step_budget=args.step_budget,
                          retries=args.retries)
    signatures, missed, assignment = group_crashes(records, seed_sigs, program, config)
    groups = merge_groups(signatures, config)
    # groups.json must partition this corpus; signature members may carry
    # crash ids from the store's previous campaigns, so rescope from the
    # run's own assignment
    for group in groups:
        owned = set(group.signature_ids)
        group.crash_ids = {cid for cid, sid in assignment.items() if sid in owned}
    groups = [g for g in groups if g.crash_ids]  # seed sigs may claim nothing
    for i, group in enumerate(groups, start=1):
        group.id = f"g{i:04d}"

    sig_dir = out_dir / "sigs"
    for sig in signatures:
        save_signature(sig_dir, sig)
    _write_json(out_dir / "groups.json", {
        "group_count": len(groups),
        "threshold": args.threshold,
        "groups": [g.to_json_dict() for g in groups],
    })
    _write_json(out_dir / "missed.json", {
        "missed_count": len(missed),
        "missed": missed,
    })
    new = len(signatures) - len(seed_sigs)
    print(f"groups: {len(groups)} (signatures: {len(signatures)}, "
          f"new: {new}, missed: {len(missed)})")
    return 0


# ---------------------------------------------------------------------------
# baseline
# ---------------------------------------------------------------------------


def cmd_baseline(args) -> int:
    program = _load_program(args.program)
    records = load_corpus(args.corpus)
    config = TriageConfig(step_budget=args.step_budget)
    if args.mode == "afl":
        report = dedup_coverage(records, program, config)
    elif args.mode == "site":
        report = dedup_crash_site(records, program, config)
    else:
        n = int(args.mode.split(":", 1)[1])
        report = dedup_stack_hash(records, program, n, config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = "baseline_" + args.mode.replace(":", "_") + ".json"
    _write_json(out_dir / name, report.to_json_dict())
    print(f"{args.mode}: {report.group_count} groups")
    return 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def _load_groups(path: Path):
    doc = json.loads(path.read_text())
    return [
        FaultGroup(id=g["group_id"], signature_ids=list(g["signature_ids"]),
                   crash_ids=set(g["crash_ids"]))
        for g in doc["groups"]
    ]


def cmd_report(args) -> int:
    out_dir = Path(args.out)
    groups_path = out_dir / "groups.json"
    if not groups_path.exists():
        print(f"error: {groups_path} not found (run `group` first)", file=sys.stderr)
        return 1
    groups = _load_groups(groups_path)
    missed_doc = json.loads((out_dir / "missed.json").read_text())

    labels_path = Path(args.labels) if args.labels else out_dir / "corpus_used" / "labels.json"
    if not labels_path.exists():
        print(f"error: no labels at {labels_path} (pass --labels)", file=sys.stderr)
        return 1
    labels = load_labels(labels_path)

    metrics = score(groups, labels, missed_doc["missed"])
    strategy_counts = {"signature": json.loads(groups_path.read_text())["group_count"]}
    for p in sorted(out_dir.glob("baseline_*.json")):
        doc = json.loads(p.read_text())
        strategy_counts[doc["strategy"]] = doc["group_count"]
    written = write_report(out_dir, metrics, fmt=args.format,
                           strategy_counts=strategy_counts)
    tot = metrics.totals
    print(f"crashes: {tot['crashes']}, correct: {tot['correct']}, "
          f"incorrect: {tot['incorrect']}, missed: {tot['missed']}")
    for path in written:
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _check_signature(sig, step_budget: int) -> list:
    """Return human-readable invariant violations for one stored signature."""
    problems = []
    rendered = sig.program.canonical_text
    if parse(rendered, require_main=True).canonical_text != rendered:
        problems.append("canonical rendering does not round-trip")
    if sig.origin_crash not in sig.members:
        problems.append("origin crash missing from members")

    try:
        out = execute(sig.program, sig.origin_input, step_budget)
    except MiniLangError:
        out = None
    if out is None or out.status is not ExecutionStatus.CRASHED \
            or out.fingerprint != sig.reference_fingerprint:
        problems.append("signature does not reproduce its reference fingerprint")
        return problems

    oracle_budget = min(step_budget, max(1000, 10 * len(out.trace)))
    kept = all_uids(sig.program)
    for uid in removable_uids(sig.program, kept):
        candidate = materialize(sig.program, normalize_keep_set(sig.program, kept - {uid}))
        try:
            res = execute(candidate, sig.origin_input, oracle_budget)
        except MiniLangError:
            # dropping a function body can orphan its call sites; a candidate
            # that cannot even run clearly does not reproduce the crash
            continue
        if res.status is not ExecutionStatus.CRASHED:
            continue
        back = fingerprint_remap(res.fingerprint, candidate, sig.program)
        if back == sig.reference_fingerprint:
            problems.append(f"not 1-minimal: statement uid {uid} is removable")
    return problems


def cmd_validate(args) -> int:
    sig_dir = Path(args.sigs) if args.sigs else Path(args.out) / "sigs"
    signatures = list_signatures(sig_dir)
    if not signatures:
        print(f"error: no signatures under {sig_dir}", file=sys.stderr)
        return 1
    failures = 0
    for sig in signatures:
        for problem in _check_signature(sig, args.step_budget):
            print(f"sig {sig.id}: {problem}", file=sys.stderr)
            failures += 1
    if failures:
        print(f"error: {failures} invariant violation(s)", file=sys.stderr)
        return 1
    print(f"{len(signatures)} signature(s) valid")
    return 0


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuzzeraid",
        description="Group fuzzer crashes by the minimal programs that reproduce them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("explore", help="grow a crash corpus from crashing seeds")
    p.add_argument("--program", required=True, help="program source file")
    p.add_argument("--seed-input", action="append", required=True,
                   help="file with raw seed bytes (repeatable)")
    p.add_argument("--iters", type=int, default=1000, help="mutations per seed")
    p.add_argument("--rng", type=int, default=0, help="rng seed")
    p.add_argument("--out", required=True, help="corpus output directory")
    p.add_argument("--patches", default=None,
                   help="directory of <bug>.ml-src fixed programs; labels the corpus")
    p.add_argument("--step-budget", type=int, default=DEFAULT_STEP_BUDGET)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("group", help="generate signatures and merge fault groups")
    p.add_argument("--program", required=True)
    p.add_argument("--corpus", required=True, help="corpus directory from explore")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed-signatures", default=None,
                   help="signature store from a previous run to classify against")
    p.add_argument("--threshold", type=float, default=0.7)
    p.add_argument("--step-budget", type=int, default=DEFAULT_STEP_BUDGET)
    p.add_argument("--retries", type=int, default=10)
    p.add_argument("--per-bug-cap", type=int, default=250,
                   help="cap crashes per labeled bug before grouping (0 disables)")
    p.add_argument("--rng", type=int, default=0, help="rng seed for cap sampling")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes for corpus verification")
    p.set_defaults(func=cmd_group)

    p = sub.add_parser("baseline", help="run a comparison deduper over the corpus")
    p.add_argument("--program", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", type=_mode, required=True, help="afl, stack:N, or site")
    p.add_argument("--out", required=True)
    p.add_argument("--step-budget", type=int, default=DEFAULT_STEP_BUDGET)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("report", help="score groups against labels, render tables and figures")
    p.add_argument("--out", required=True, help="directory holding groups.json")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--labels", default=None,
                   help="labels.json path (default: <out>/corpus_used/labels.json)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("validate", help="re-check every invariant of a signature store")
    p.add_argument("--out", required=True, help="directory from a group run")
    p.add_argument("--sigs", default=None, help="signature store (default: <out>/sigs)")
    p.add_argument("--step-budget", type=int, default=DEFAULT_STEP_BUDGET)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (FuzzeraidError, MiniLangError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
