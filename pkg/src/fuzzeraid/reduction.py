"""Delta-debugging reduction of crashing programs.

The reducer works on subsets of statement uids.  A candidate subset is
normalized (declarations whose variable is referenced by a kept statement are
added back, so candidates stay runnable), materialized into a real Program,
executed, and accepted only when the failure fingerprint matches the target
after line re-mapping.  Compound statements need no special casing in the
subset model: dropping an ``if``/``while`` header uid while keeping its
children splices the body inline, and dropping header plus children removes
the whole construct.

The search is a ddmin-style chunk sweep that falls back to single-statement
removals, plus a pass that drops functions unreachable from main, repeated to
a fixpoint.  Every accepted candidate was verified against the oracle, so the
best-so-far program always reproduces the failure even when the oracle run
budget expires mid-search.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NotReproducing, UnmappableFrame
from .minilang import nodes as N
from .minilang.errors import MiniLangRuntimeError
from .minilang.interp import DEFAULT_STEP_BUDGET, ExecutionStatus, execute
from .minilang.nodes import (
    FailureFingerprint,
    Program,
    StackFrame,
    StatementId,
    walk_statements,
)

DEFAULT_MAX_ORACLE_RUNS = 10_000


# ---------------------------------------------------------------------------
# name references
# ---------------------------------------------------------------------------


def expr_names(e) -> set:
    """All variable names an expression mentions."""
    if isinstance(e, (N.Ident, N.Deref, N.AddrOf)):
        return {e.name}
    if isinstance(e, N.Index):
        return {e.name} | expr_names(e.index)
    if isinstance(e, N.InputByte):
        return expr_names(e.index)
    if isinstance(e, N.Call):
        out = set()
        for a in e.args:
            out |= expr_names(a)
        return out
    if isinstance(e, N.Unary):
        return expr_names(e.operand)
    if isinstance(e, N.Binary):
        return expr_names(e.left) | expr_names(e.right)
    return set()


def stmt_own_names(stmt) -> set:
    """Names a single statement mentions, ignoring nested statements."""
    if isinstance(stmt, N.VarDecl):
        return expr_names(stmt.init) if stmt.init is not None else set()
    if isinstance(stmt, N.Assign):
        names = {stmt.target.name} | expr_names(stmt.value)
        if stmt.target.index is not None:
            names |= expr_names(stmt.target.index)
        return names
    if isinstance(stmt, N.CallStmt):
        return expr_names(stmt.call)
    if isinstance(stmt, N.Return):
        return expr_names(stmt.value) if stmt.value is not None else set()
    if isinstance(stmt, N.Free):
        return {stmt.name}
    if isinstance(stmt, N.AssertStmt):
        return expr_names(stmt.cond)
    if isinstance(stmt, (N.If, N.While)):
        return expr_names(stmt.cond)
    return set()


def expr_callees(e) -> set:
    """Function names called anywhere inside an expression."""
    if isinstance(e, N.Call):
        out = {e.callee}
        for a in e.args:
            out |= expr_callees(a)
        return out
    if isinstance(e, N.Index):
        return expr_callees(e.index)
    if isinstance(e, N.InputByte):
        return expr_callees(e.index)
    if isinstance(e, N.Unary):
        return expr_callees(e.operand)
    if isinstance(e, N.Binary):
        return expr_callees(e.left) | expr_callees(e.right)
    return set()


def stmt_own_callees(stmt) -> set:
    if isinstance(stmt, N.VarDecl):
        return expr_callees(stmt.init) if stmt.init is not None else set()
    if isinstance(stmt, N.Assign):
        out = expr_callees(stmt.value)
        if stmt.target.index is not None:
            out |= expr_callees(stmt.target.index)
        return out
    if isinstance(stmt, N.CallStmt):
        return expr_callees(stmt.call)
    if isinstance(stmt, N.Return):
        return expr_callees(stmt.value) if stmt.value is not None else set()
    if isinstance(stmt, N.AssertStmt):
        return expr_callees(stmt.cond)
    if isinstance(stmt, (N.If, N.While)):
        return expr_callees(stmt.cond)
    return set()


# ---------------------------------------------------------------------------
# subset model: normalize / materialize
# ---------------------------------------------------------------------------


def normalize_keep_set(program: Program, kept: set) -> set:
    """Close a keep-set over the declarations its statements rely on.

    Any local or global declaration whose variable is mentioned by a kept
    statement is added back, to a fixpoint (a declaration initializer can
    itself mention further variables).  Such declarations are exactly the
    non-removable statements.
    """
    kept = set(kept)
    global_by_name = {g.name: g for g in program.globals}
    while True:
        added = False
        global_refs = set()
        for fn in program.functions:
            decls_by_name = {}
            for s in walk_statements(fn.body):
                if isinstance(s, N.VarDecl):
                    decls_by_name.setdefault(s.name, []).append(s)
            referenced = set()
            for s in walk_statements(fn.body):
                if s.uid in kept:
                    referenced |= stmt_own_names(s)
            for name in referenced:
                if name in decls_by_name:
                    for d in decls_by_name[name]:
                        if d.uid not in kept:
                            kept.add(d.uid)
                            added = True
                elif name not in fn.params:
                    global_refs.add(name)
        for name in global_refs:
            g = global_by_name.get(name)
            if g is not None and g.uid not in kept:
                kept.add(g.uid)
                added = True
        if not added:
            return kept


def _rebuild_body(body, kept: set) -> list:
    out = []
    for s in body:
        if isinstance(s, N.If):
            then_kept = _rebuild_body(s.then_body, kept)
            else_kept = _rebuild_body(s.else_body, kept)
            if s.uid in kept:
                out.append(N.If(s.uid, s.cond, then_kept, else_kept))
            else:
                out.extend(then_kept)
                out.extend(else_kept)
        elif isinstance(s, N.While):
            inner = _rebuild_body(s.body, kept)
            if s.uid in kept:
                out.append(N.While(s.uid, s.cond, inner))
            else:
                out.extend(inner)
        elif s.uid in kept:
            out.append(s)
    return out


def materialize(program: Program, kept: set) -> Program:
    """Build the program a keep-set denotes.

    Removed compound headers splice their surviving children inline.
    Functions left with no statements are dropped entirely, except main,
    which must exist for the result to run at all.
    """
    globals_ = [g for g in program.globals if g.uid in kept]
    functions = []
    for fn in program.functions:
        body = _rebuild_body(fn.body, kept)
        if body or fn.name == "main":
            functions.append(N.FunctionDef(fn.name, fn.params, body))
    return Program(globals_, functions)


def all_uids(program: Program) -> set:
    uids = {g.uid for g in program.globals}
    for fn in program.functions:
        for s in walk_statements(fn.body):
            uids.add(s.uid)
    return uids


def forced_decl_uids(program: Program, kept: set) -> set:
    """Declaration uids that kept statements currently rely on.

    These are the non-removable statements: deleting one would only be
    undone by normalization.
    """
    forced = set()
    global_by_name = {g.name: g for g in program.globals}
    for fn in program.functions:
        decls_by_name = {}
        for s in walk_statements(fn.body):
            if isinstance(s, N.VarDecl):
                decls_by_name.setdefault(s.name, []).append(s.uid)
        referenced = set()
        for s in walk_statements(fn.body):
            if s.uid in kept:
                referenced |= stmt_own_names(s)
        for name in referenced:
            if name in decls_by_name:
                forced.update(decls_by_name[name])
            elif name not in fn.params and name in global_by_name:
                forced.add(global_by_name[name].uid)
    return forced


def removable_uids(program: Program, kept: set) -> list:
    """Kept uids that are fair game for deletion, in source order.

    Declarations currently relied on by kept statements are excluded;
    everything else (including unreferenced declarations and globals) is
    removable.
    """
    protected = forced_decl_uids(program, kept)
    order = []
    for g in program.globals:
        if g.uid in kept and g.uid not in protected:
            order.append(g.uid)
    for fn in program.functions:
        for s in walk_statements(fn.body):
            if s.uid in kept and s.uid not in protected:
                order.append(s.uid)
    return order


# ---------------------------------------------------------------------------
# fingerprint line re-mapping
# ---------------------------------------------------------------------------


def fingerprint_remap(fp: FailureFingerprint, from_prog: Program, to_prog: Program) -> FailureFingerprint:
    """Re-express a fingerprint's lines in another rendering of the program.

    Statements carry stable uids through slicing and reduction, so a frame
    maps by looking up its statement in the source program and finding the
    same uid's line in the target.  A frame whose statement no longer exists
    raises UnmappableFrame.
    """
    if to_prog is from_prog:
        return fp

    def map_frame(function: str, line: int):
        try:
            stmt = from_prog.statement_at(StatementId(function, line))
        except KeyError:
            raise UnmappableFrame(f"no statement at {function}:{line}")
        if not to_prog.has_statement_uid(stmt.uid):
            raise UnmappableFrame(f"statement {function}:{line} was removed")
        return to_prog.statement_id_of(stmt.uid)

    loc = map_frame(fp.location.function, fp.location.line)
    stack = tuple(
        StackFrame(*map_frame(f.function, f.line)) for f in fp.stack
    )
    return FailureFingerprint(kind=fp.kind, location=StatementId(*loc), stack=stack)


# ---------------------------------------------------------------------------
# the reducer
# ---------------------------------------------------------------------------


@dataclass
class ReduceResult:
    program: Program
    minimal: bool
    oracle_runs: int


class _OracleExhausted(Exception):
    pass


class _Search:
    def __init__(self, base: Program, input_bytes: bytes, target: FailureFingerprint,
                 step_budget: int, max_oracle_runs: int):
        self.base = base
        self.input = input_bytes
        self.target = target
        self.step_budget = step_budget
        self.max_runs = max_oracle_runs
        self.runs = 0
        self.cache = {}
        self.kept = normalize_keep_set(base, all_uids(base))

    def verdict(self, kept: set) -> bool:
        prog = materialize(self.base, kept)
        key = prog.canonical_text
        if key in self.cache:
            return self.cache[key]
        if self.runs >= self.max_runs:
            raise _OracleExhausted()
        self.runs += 1
        ok = False
        try:
            out = execute(prog, self.input, self.step_budget)
        except MiniLangRuntimeError:
            out = None  # candidate became an invalid program; not a match
        if out is not None and out.status is ExecutionStatus.CRASHED:
            try:
                ok = out.fingerprint == fingerprint_remap(self.target, self.base, prog)
            except UnmappableFrame:
                ok = False
        self.cache[key] = ok
        return ok

    def try_remove(self, uids) -> bool:
        trial = normalize_keep_set(self.base, self.kept - set(uids))
        if trial == self.kept:
            return False
        if self.verdict(trial):
            self.kept = trial
            return True
        return False

    def ddmin_to_fixpoint(self) -> bool:
        changed = False
        chunk = max(1, len(removable_uids(self.base, self.kept)) // 2)
        while True:
            removed_at_this_size = False
            order = removable_uids(self.base, self.kept)
            i = 0
            while i < len(order):
                block = order[i:i + chunk]
                if self.try_remove(block):
                    changed = removed_at_this_size = True
                    order = removable_uids(self.base, self.kept)
                else:
                    i += chunk
            if removed_at_this_size:
                continue  # same chunk size again until it stops paying
            if chunk == 1:
                return changed
            chunk = max(1, chunk // 2)

    def prune_unreachable(self) -> bool:
        """Drop every function main cannot reach through kept call sites."""
        callees = {}
        for fn in self.base.functions:
            names = set()
            for s in walk_statements(fn.body):
                if s.uid in self.kept:
                    names |= stmt_own_callees(s)
            callees[fn.name] = names
        reachable = set()
        frontier = ["main"]
        while frontier:
            name = frontier.pop()
            if name in reachable or name not in callees:
                continue
            reachable.add(name)
            frontier.extend(callees[name])
        doomed = set()
        for fn in self.base.functions:
            if fn.name in reachable:
                continue
            for s in walk_statements(fn.body):
                if s.uid in self.kept:
                    doomed.add(s.uid)
        if not doomed:
            return False
        return self.try_remove(doomed)


def reduce(candidate: Program, input_bytes: bytes, target: FailureFingerprint,
           step_budget: int = DEFAULT_STEP_BUDGET,
           max_oracle_runs: int = DEFAULT_MAX_ORACLE_RUNS) -> ReduceResult:
    """Shrink a crashing program while preserving its failure fingerprint.

    Returns the smallest program found, a flag saying whether the search ran
    to its fixpoint (a 1-minimal result) or stopped on the oracle-run budget,
    and the number of oracle executions spent.
    """
    search = _Search(candidate, input_bytes, target, step_budget, max_oracle_runs)
    minimal = False
    try:
        if not search.verdict(search.kept):
            raise NotReproducing(
                "candidate program does not reproduce the target fingerprint"
            )
        while True:
            changed = search.ddmin_to_fixpoint()
            changed = search.prune_unreachable() or changed
            if not changed:
                break
        minimal = True
    except _OracleExhausted:
        minimal = False
    return ReduceResult(
        program=materialize(search.base, search.kept),
        minimal=minimal,
        oracle_runs=search.runs,
    )
