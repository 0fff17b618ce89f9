"""Deterministic tracing interpreter.

Execution is a pure function of (program, input bytes, step budget).  Every
executed statement appends its StatementId to the trace and bumps the count
of the (previous, current) statement edge, AFL style.  The five modeled
failure kinds surface as a Crashed outcome carrying a FailureFingerprint;
anything outside the semantics (unbound names, missing callees, type
confusion) raises MiniLangRuntimeError instead, because it means the program
is invalid rather than buggy.

Semantics notes that the grammar alone does not pin down:

* ``int`` variables start at 0, ``ptr`` variables at null, arrays zeroed.
* Assigning to an undeclared name implicitly creates a local integer slot;
  reading an unbound name is a host error.
* ``free(p)`` frees the cell p points at.  Freeing null is a no-op; freeing
  an already-freed cell is reported as UseAfterFree, as is any later read or
  write through the freed cell (including direct reads of a freed variable).
* Division and modulo truncate toward zero, signs as in C; dividing or
  taking a remainder by zero is DivByZero.
* ``input(i)`` yields byte i of the input, or -1 when i is out of range.
* Conditions must be integers; nonzero is true.  ``&&``/``||`` short-circuit.
* Recursion has no modeled fault of its own: call depth beyond
  MAX_CALL_DEPTH is reported as BudgetExhausted, the same outcome a runaway
  loop gets, so reduction candidates that recurse forever stay inside the
  budget model.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from . import nodes as N
from .errors import MiniLangRuntimeError, MissingMainError
from .nodes import FailureFingerprint, FailureKind, StackFrame, StatementId

DEFAULT_STEP_BUDGET = 1_000_000
MAX_CALL_DEPTH = 128


class ExecutionStatus(str, Enum):
    COMPLETED = "completed"
    CRASHED = "crashed"
    BUDGET_EXHAUSTED = "budget_exhausted"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ExecutionOutcome:
    """Result of one run: status, optional fingerprint, trace, edge counts."""

    status: ExecutionStatus
    fingerprint: Optional[FailureFingerprint]
    trace: tuple  # tuple[StatementId, ...]
    edges: dict  # {(StatementId, StatementId): count}

    @property
    def crashed(self) -> bool:
        return self.status is ExecutionStatus.CRASHED

    @property
    def steps(self) -> int:
        return len(self.trace)

    def to_json_dict(self) -> dict:
        return {
            "status": self.status.value,
            "fingerprint": self.fingerprint.to_json_dict() if self.fingerprint else None,
            "steps": len(self.trace),
            "trace": [[sid.function, sid.line] for sid in self.trace],
            "edges": [
                {"from": [a.function, a.line], "to": [b.function, b.line], "count": count}
                for (a, b), count in sorted(
                    self.edges.items(), key=lambda kv: (kv[0][0], kv[0][1])
                )
            ],
        }

# The evaluator recurses through Python for nested frames; give it room for
# MAX_CALL_DEPTH mini-language frames times the Python frames each one costs.
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20_000))


@dataclass(frozen=True)
class Pointer:
    """A pointer value: the id of a cell, or None for null."""

    cell: Optional[int]


NULL = Pointer(None)


class _Cell:
    __slots__ = ("value", "freed")

    def __init__(self, value):
        self.value = value
        self.freed = False


class _Frame:
    __slots__ = ("function", "env", "line")

    def __init__(self, function: str):
        self.function = function
        self.env = {}
        self.line = 0


class _Crash(Exception):
    def __init__(self, fingerprint: FailureFingerprint):
        self.fingerprint = fingerprint


class _Budget(Exception):
    pass


class _ReturnValue(Exception):
    def __init__(self, value):
        self.value = value


class _Machine:
    def __init__(self, program: N.Program, input_bytes: bytes, step_budget: int):
        self.program = program
        self.input = input_bytes
        self.budget = step_budget
        self.trace = []
        self.edges = {}
        self._prev_sid = None
        self.cells = {}
        self._next_cell = 0
        self.global_env = {}
        self.frames = []

    # -- storage ------------------------------------------------------------

    def new_cell(self, value) -> int:
        self._next_cell += 1
        self.cells[self._next_cell] = _Cell(value)
        return self._next_cell

    def cell_for_read(self, cell_id: int) -> _Cell:
        cell = self.cells[cell_id]
        if cell.freed:
            self.crash(FailureKind.USE_AFTER_FREE)
        return cell

    # -- name resolution ----------------------------------------------------

    def frame(self) -> _Frame:
        return self.frames[-1]

    def lookup_cell(self, name: str) -> int:
        env = self.frame().env
        if name in env:
            return env[name]
        if name in self.global_env:
            return self.global_env[name]
        raise MiniLangRuntimeError(f"read of unbound name {name!r}")

    def bind_local(self, name: str, value) -> int:
        cell_id = self.new_cell(value)
        self.frame().env[name] = cell_id
        return cell_id

    def cell_for_assign(self, name: str) -> int:
        env = self.frame().env
        if name in env:
            return env[name]
        if name in self.global_env:
            return self.global_env[name]
        return self.bind_local(name, 0)

    # -- failure reporting ----------------------------------------------------

    def crash(self, kind: FailureKind):
        innermost = self.frame()
        location = StatementId(innermost.function, innermost.line)
        stack = tuple(StackFrame(f.function, f.line) for f in self.frames)
        raise _Crash(FailureFingerprint(kind=kind, location=location, stack=stack))

    # -- expression evaluation ----------------------------------------------

    def as_int(self, value, what: str) -> int:
        if isinstance(value, int):
            return value
        raise MiniLangRuntimeError(f"{what} must be an integer, got {value!r}")

    def eval(self, e):
        if isinstance(e, N.IntLit):
            return e.value
        if isinstance(e, N.Ident):
            return self.cell_for_read(self.lookup_cell(e.name)).value
        if isinstance(e, N.NullLit):
            return NULL
        if isinstance(e, N.AddrOf):
            return Pointer(self.lookup_cell(e.name))
        if isinstance(e, N.Deref):
            return self.read_through(e.name)
        if isinstance(e, N.Index):
            return self.read_indexed(e.name, e.index)
        if isinstance(e, N.InputByte):
            idx = self.as_int(self.eval(e.index), "input() index")
            if 0 <= idx < len(self.input):
                return self.input[idx]
            return -1
        if isinstance(e, N.Call):
            return self.call_function(e)
        if isinstance(e, N.Unary):
            v = self.as_int(self.eval(e.operand), f"operand of {e.op!r}")
            return -v if e.op == "-" else (0 if v else 1)
        if isinstance(e, N.Binary):
            return self.eval_binary(e)
        raise MiniLangRuntimeError(f"unknown expression node {e!r}")

    def eval_binary(self, e: N.Binary):
        op = e.op
        if op == "&&":
            left = self.as_int(self.eval(e.left), "operand of '&&'")
            if not left:
                return 0
            return 1 if self.as_int(self.eval(e.right), "operand of '&&'") else 0
        if op == "||":
            left = self.as_int(self.eval(e.left), "operand of '||'")
            if left:
                return 1
            return 1 if self.as_int(self.eval(e.right), "operand of '||'") else 0
        left = self.eval(e.left)
        right = self.eval(e.right)
        if op in ("==", "!="):
            if isinstance(left, Pointer) and isinstance(right, Pointer):
                eq = left == right
            elif isinstance(left, int) and isinstance(right, int):
                eq = left == right
            else:
                raise MiniLangRuntimeError("'==' needs two integers or two pointers")
            return int(eq if op == "==" else not eq)
        lv = self.as_int(left, f"operand of {op!r}")
        rv = self.as_int(right, f"operand of {op!r}")
        if op == "+":
            return lv + rv
        if op == "-":
            return lv - rv
        if op == "*":
            return lv * rv
        if op in ("/", "%"):
            if rv == 0:
                self.crash(FailureKind.DIV_BY_ZERO)
            quot = abs(lv) // abs(rv)
            if (lv < 0) != (rv < 0):
                quot = -quot
            if op == "/":
                return quot
            return lv - quot * rv  # remainder keeps the dividend's sign
        if op == "<":
            return int(lv < rv)
        if op == "<=":
            return int(lv <= rv)
        if op == ">":
            return int(lv > rv)
        if op == ">=":
            return int(lv >= rv)
        raise MiniLangRuntimeError(f"unknown operator {op!r}")

    def pointer_target(self, name: str) -> _Cell:
        holder = self.cell_for_read(self.lookup_cell(name))
        value = holder.value
        if not isinstance(value, Pointer):
            raise MiniLangRuntimeError(f"{name!r} does not hold a pointer")
        if value.cell is None:
            self.crash(FailureKind.NULL_DEREF)
        target = self.cells[value.cell]
        if target.freed:
            self.crash(FailureKind.USE_AFTER_FREE)
        return target

    def read_through(self, name: str):
        target = self.pointer_target(name)
        if isinstance(target.value, list):
            raise MiniLangRuntimeError(f"*{name} points at an array, not a scalar")
        return target.value

    def read_indexed(self, name: str, index_expr):
        cell = self.cell_for_read(self.lookup_cell(name))
        if not isinstance(cell.value, list):
            raise MiniLangRuntimeError(f"{name!r} is not an array")
        idx = self.as_int(self.eval(index_expr), "array index")
        if idx < 0 or idx >= len(cell.value):
            self.crash(FailureKind.OUT_OF_BOUNDS)
        return cell.value[idx]

    # -- calls ----------------------------------------------------------------

    def call_function(self, call: N.Call):
        fn = self.program.function_map.get(call.callee)
        if fn is None:
            raise MiniLangRuntimeError(f"call to undefined function {call.callee!r}")
        if len(call.args) != len(fn.params):
            raise MiniLangRuntimeError(
                f"{call.callee}() takes {len(fn.params)} arguments, got {len(call.args)}"
            )
        args = [self.eval(a) for a in call.args]
        if len(self.frames) >= MAX_CALL_DEPTH:
            # Runaway recursion is nontermination under this model.
            raise _Budget()
        frame = _Frame(fn.name)
        self.frames.append(frame)
        try:
            for param, value in zip(fn.params, args):
                frame.env[param] = self.new_cell(value)
            self.exec_body(fn.body)
        except _ReturnValue as ret:
            return ret.value
        finally:
            self.frames.pop()
        return 0

    # -- statements -----------------------------------------------------------

    def step(self, stmt):
        sid = self.program.statement_id_of(stmt.uid)
        if len(self.trace) >= self.budget:
            raise _Budget()
        self.frame().line = sid.line
        self.trace.append(sid)
        if self._prev_sid is not None:
            key = (self._prev_sid, sid)
            self.edges[key] = self.edges.get(key, 0) + 1
        self._prev_sid = sid

    def exec_body(self, stmts):
        for stmt in stmts:
            self.exec_stmt(stmt)

    def exec_stmt(self, stmt):
        self.step(stmt)
        if isinstance(stmt, N.VarDecl):
            if stmt.kind == "int":
                value = self.eval(stmt.init) if stmt.init is not None else 0
            elif stmt.kind == "ptr":
                value = self.eval(stmt.init) if stmt.init is not None else NULL
            else:
                value = [0] * stmt.size
            self.bind_local(stmt.name, value)
            return
        if isinstance(stmt, N.Assign):
            value = self.eval(stmt.value)
            target = stmt.target
            if target.kind == "name":
                cell = self.cells[self.cell_for_assign(target.name)]
                if cell.freed:
                    self.crash(FailureKind.USE_AFTER_FREE)
                cell.value = value
            elif target.kind == "deref":
                dest = self.pointer_target(target.name)
                if isinstance(dest.value, list):
                    raise MiniLangRuntimeError(f"*{target.name} points at an array")
                dest.value = value
            else:
                cell = self.cell_for_read(self.lookup_cell(target.name))
                if not isinstance(cell.value, list):
                    raise MiniLangRuntimeError(f"{target.name!r} is not an array")
                idx = self.as_int(self.eval(target.index), "array index")
                if idx < 0 or idx >= len(cell.value):
                    self.crash(FailureKind.OUT_OF_BOUNDS)
                cell.value[idx] = self.as_int(value, "array element")
            return
        if isinstance(stmt, N.CallStmt):
            self.eval(stmt.call)
            return
        if isinstance(stmt, N.Return):
            value = self.eval(stmt.value) if stmt.value is not None else 0
            raise _ReturnValue(value)
        if isinstance(stmt, N.Free):
            holder = self.cell_for_read(self.lookup_cell(stmt.name))
            value = holder.value
            if not isinstance(value, Pointer):
                raise MiniLangRuntimeError(f"free({stmt.name}): not a pointer")
            if value.cell is None:
                return  # freeing null is a no-op
            target = self.cells[value.cell]
            if target.freed:
                self.crash(FailureKind.USE_AFTER_FREE)
            target.freed = True
            return
        if isinstance(stmt, N.AssertStmt):
            cond = self.as_int(self.eval(stmt.cond), "assert condition")
            if cond == 0:
                self.crash(FailureKind.ASSERT_FAIL)
            return
        if isinstance(stmt, N.If):
            cond = self.as_int(self.eval(stmt.cond), "if condition")
            self.exec_body(stmt.then_body if cond else stmt.else_body)
            return
        if isinstance(stmt, N.While):
            while True:
                cond = self.as_int(self.eval(stmt.cond), "while condition")
                if not cond:
                    return
                self.exec_body(stmt.body)
                # re-evaluating the header is a step of its own
                self.step(stmt)
        raise MiniLangRuntimeError(f"unknown statement {stmt!r}")

    # -- entry ------------------------------------------------------------------

    def run(self) -> ExecutionOutcome:
        main = self.program.function_map.get("main")
        if main is None:
            raise MissingMainError()
        if main.params:
            raise MiniLangRuntimeError("main must take no parameters")
        for g in self.program.globals:
            self.global_env[g.name] = self.new_cell(g.value)
        frame = _Frame("main")
        self.frames.append(frame)
        try:
            try:
                self.exec_body(main.body)
            except _ReturnValue:
                pass
            status = ExecutionStatus.COMPLETED
            fingerprint = None
        except _Crash as c:
            status = ExecutionStatus.CRASHED
            fingerprint = c.fingerprint
        except _Budget:
            status = ExecutionStatus.BUDGET_EXHAUSTED
            fingerprint = None
        return ExecutionOutcome(
            status=status,
            fingerprint=fingerprint,
            trace=tuple(self.trace),
            edges=dict(self.edges),
        )


def execute(program: N.Program, input_bytes: bytes, step_budget: int = DEFAULT_STEP_BUDGET) -> ExecutionOutcome:
    """Run a program on an input under a step budget."""
    if not isinstance(input_bytes, (bytes, bytearray)):
        raise TypeError("input must be bytes")
    return _Machine(program, bytes(input_bytes), step_budget).run()


# AFL-style hit-count buckets: {1} {2} {3} {4-7} {8-15} {16-31} {32-127} {128+}
_BUCKET_LIMITS = (1, 2, 3, 7, 15, 31, 127)


def bucket_index(count: int) -> int:
    for i, limit in enumerate(_BUCKET_LIMITS):
        if count <= limit:
            return i
    return 7


def bucket_edges(edges: dict) -> frozenset:
    """Collapse raw edge counts into (edge, bucket) coverage points."""
    return frozenset((edge, bucket_index(count)) for edge, count in edges.items() if count > 0)
