"""Integrity checks for the bundled fixture programs.

Every fixture must parse, every declared seed must actually crash, and for
the multi-bug programs each patch must eliminate exactly the crashes of its
own bug.  The rest of the suite leans on these properties, so failures here
point at a broken fixture rather than broken tooling.
"""

import json
from pathlib import Path

import pytest

from fuzzeraid.minilang import ExecutionStatus, execute, parse

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

REPRO_FIXTURES = ("branchy", "shared_helper")
SUITE_FIXTURES = ("calc", "scanner", "table", "parser", "machine", "router")
ALL_FIXTURES = REPRO_FIXTURES + SUITE_FIXTURES


def load_fixture(name):
    root = FIXTURES / name
    program = parse((root / "program.ml-src").read_text(), require_main=True)
    seeds = json.loads((root / "seeds.json").read_text())
    return root, program, seeds


def load_patches(root):
    return {
        p.stem: parse(p.read_text(), require_main=True)
        for p in sorted((root / "patches").glob("*.ml-src"))
    }


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_program_parses_and_has_main(name):
    _, program, seeds = load_fixture(name)
    assert any(f.name == "main" for f in program.functions)
    assert seeds, f"{name} declares no seeds"


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_every_seed_crashes(name):
    _, program, seeds = load_fixture(name)
    for seed in seeds:
        data = bytes.fromhex(seed["input_hex"])
        out = execute(program, data)
        assert out.status is ExecutionStatus.CRASHED, (
            f"{name} seed {seed['name']} did not crash (got {out.status.value})"
        )
        assert out.fingerprint is not None


@pytest.mark.parametrize("name", SUITE_FIXTURES)
def test_patches_parse_and_cover_declared_bugs(name):
    root, _, seeds = load_fixture(name)
    patches = load_patches(root)
    declared = {seed["bug"] for seed in seeds}
    assert declared == set(patches), (
        f"{name}: seeds declare bugs {sorted(declared)} "
        f"but patches exist for {sorted(patches)}"
    )


@pytest.mark.parametrize("name", SUITE_FIXTURES)
def test_each_patch_kills_exactly_its_own_seed(name):
    """A patch fixes one bug: its seed stops crashing, the other seeds keep
    crashing.  This is what makes patch-based ground truth unambiguous."""
    root, _, seeds = load_fixture(name)
    patches = load_patches(root)
    for seed in seeds:
        data = bytes.fromhex(seed["input_hex"])
        killers = [
            bug_id
            for bug_id, patched in sorted(patches.items())
            if execute(patched, data).status is not ExecutionStatus.CRASHED
        ]
        assert killers == [seed["bug"]], (
            f"{name} seed {seed['name']}: eliminated by {killers}, "
            f"expected exactly [{seed['bug']}]"
        )


@pytest.mark.parametrize("name", SUITE_FIXTURES)
def test_bugs_have_distinct_fingerprints(name):
    """Seeds of different bugs must not share a fingerprint, otherwise the
    fixture could not tell a grouping mistake from a grouping success."""
    _, program, seeds = load_fixture(name)
    prints = {}
    for seed in seeds:
        out = execute(program, bytes.fromhex(seed["input_hex"]))
        prints[seed["bug"]] = json.dumps(out.fingerprint.to_json_dict(), sort_keys=True)
    values = list(prints.values())
    assert len(set(values)) == len(values), f"{name}: bugs share a crash fingerprint"


def test_shared_helper_routes_reach_the_same_faulting_write():
    """The first two seeds take different entry routes into the same buggy
    helper chain.  The third seed is a separate fault that happens to die at
    the same statement with the same caller names, which is exactly the case
    that defeats stack hashing."""
    _, program, seeds = load_fixture("shared_helper")
    outs = [execute(program, bytes.fromhex(s["input_hex"])) for s in seeds]
    sites = [(o.fingerprint.location.function, o.fingerprint.location.line) for o in outs]
    assert sites[0] == sites[1] == sites[2]
    names = [tuple(f.function for f in o.fingerprint.stack) for o in outs]
    assert names[0] != names[1], "same-bug routes should differ in entry function"
    assert names[0] == names[2], "cross-bug stacks should collide by function name"
    # Full fingerprints (with per-frame lines) still tell all three apart.
    full = [json.dumps(o.fingerprint.to_json_dict(), sort_keys=True) for o in outs]
    assert len(set(full)) == 3


def test_branchy_seeds_crash_at_one_site_via_two_branches():
    _, program, seeds = load_fixture("branchy")
    outs = [execute(program, bytes.fromhex(s["input_hex"])) for s in seeds]
    sites = [(o.fingerprint.location.function, o.fingerprint.location.line) for o in outs]
    assert sites[0] == sites[1]
    # The caller line differs, so raw fingerprints do not collapse the pair.
    full = [json.dumps(o.fingerprint.to_json_dict(), sort_keys=True) for o in outs]
    assert full[0] != full[1]
