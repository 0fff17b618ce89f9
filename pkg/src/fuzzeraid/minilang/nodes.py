"""AST node types and the Program container for the bundled mini-language.

Every statement node carries a ``uid`` that is unique within its program.
Derived programs (slices, reduction candidates) share statement objects with
the program they came from, so a uid identifies "the same statement" across
that whole family of programs.  Line numbers, by contrast, are a property of
one program's canonical rendering and are looked up through the Program.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, NamedTuple, Optional, Union


class StatementId(NamedTuple):
    """Identity of an executable statement: (function name, line).

    ``line`` is the 1-based line index inside the function's canonical
    rendering, counting the ``fn name(...) {`` header as line 1.
    """

    function: str
    line: int


class StackFrame(NamedTuple):
    """One call-stack frame: the function plus its current line.

    For suspended frames the line is the call site; for the innermost frame
    it is the line of the statement being executed.
    """

    function: str
    line: int


CallStack = tuple  # tuple[StackFrame, ...]


class FailureKind(str, Enum):
    NULL_DEREF = "NullDeref"
    USE_AFTER_FREE = "UseAfterFree"
    DIV_BY_ZERO = "DivByZero"
    OUT_OF_BOUNDS = "OutOfBounds"
    ASSERT_FAIL = "AssertFail"

    def __str__(self) -> str:  # serialize as the bare token
        return self.value


@dataclass(frozen=True)
class FailureFingerprint:
    """What makes two crashes "the same failure".

    Equality covers the failure kind, the crashing statement, and the full
    call stack including call-site lines.
    """

    kind: FailureKind
    location: StatementId
    stack: tuple  # tuple[StackFrame, ...], outermost first

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "location": {"function": self.location.function, "line": self.location.line},
            "stack": [{"function": f.function, "line": f.line} for f in self.stack],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FailureFingerprint":
        return cls(
            kind=FailureKind(d["kind"]),
            location=StatementId(d["location"]["function"], d["location"]["line"]),
            stack=tuple(StackFrame(f["function"], f["line"]) for f in d["stack"]),
        )


# --------------------------------------------------------------------------
# Expressions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class NullLit:
    pass


@dataclass(frozen=True)
class Deref:
    name: str


@dataclass(frozen=True)
class AddrOf:
    name: str


@dataclass(frozen=True)
class Index:
    name: str
    index: "Expr"


@dataclass(frozen=True)
class InputByte:
    index: "Expr"


@dataclass(frozen=True)
class Call:
    callee: str
    args: tuple  # tuple[Expr, ...]


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "!"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[IntLit, Ident, NullLit, Deref, AddrOf, Index, InputByte, Call, Unary, Binary]


# --------------------------------------------------------------------------
# Lvalues and statements
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LValue:
    """Assignment target: a plain name, ``*name``, or ``name[index]``."""

    kind: str  # "name" | "deref" | "index"
    name: str
    index: Optional[Expr] = None


@dataclass
class GlobalDecl:
    uid: int
    name: str
    value: int = 0


@dataclass
class VarDecl:
    uid: int
    kind: str  # "int" | "ptr" | "array"
    name: str
    size: Optional[int] = None  # arrays only
    init: Optional[Expr] = None


@dataclass
class Assign:
    uid: int
    target: LValue
    value: Expr


@dataclass
class CallStmt:
    uid: int
    call: Call


@dataclass
class Return:
    uid: int
    value: Optional[Expr] = None


@dataclass
class Free:
    uid: int
    name: str


@dataclass
class AssertStmt:
    uid: int
    cond: Expr


@dataclass
class If:
    uid: int
    cond: Expr
    then_body: list = field(default_factory=list)
    else_body: list = field(default_factory=list)


@dataclass
class While:
    uid: int
    cond: Expr
    body: list = field(default_factory=list)


Stmt = Union[VarDecl, Assign, CallStmt, Return, Free, AssertStmt, If, While]

COMPOUND_TYPES = (If, While)


def stmt_children(stmt: Stmt) -> list:
    """Direct child statements of a compound statement, in source order."""
    if isinstance(stmt, If):
        return list(stmt.then_body) + list(stmt.else_body)
    if isinstance(stmt, While):
        return list(stmt.body)
    return []


def walk_statements(stmts) -> Iterator[Stmt]:
    """Preorder walk over a statement list, descending into compounds."""
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from walk_statements(s.then_body)
            yield from walk_statements(s.else_body)
        elif isinstance(s, While):
            yield from walk_statements(s.body)


@dataclass
class FunctionDef:
    name: str
    params: list
    body: list


class Program:
    """A parsed program plus its canonical rendering and line tables.

    Instances are treated as immutable once constructed.  Structural equality
    is equality of the canonical rendering, which is stable under
    parse/render round trips.
    """

    def __init__(self, globals_: list, functions: list):
        self.globals = list(globals_)
        self.functions = list(functions)
        self.function_map = {f.name: f for f in self.functions}
        # Rendering and line layout are computed once, eagerly; every other
        # component (interpreter, reducer, similarity) reads them.
        from .render import _layout_program

        text, fn_uid_to_line, fn_line_to_stmt, fn_line_count = _layout_program(self)
        self._text = text
        self._fn_uid_to_line = fn_uid_to_line
        self._fn_line_to_stmt = fn_line_to_stmt
        self._fn_line_count = fn_line_count
        self._uid_to_sid = {}
        for fn_name, table in fn_uid_to_line.items():
            for uid, line in table.items():
                self._uid_to_sid[uid] = StatementId(fn_name, line)

    # -- canonical form ----------------------------------------------------

    @property
    def canonical_text(self) -> str:
        return self._text

    def __eq__(self, other) -> bool:
        return isinstance(other, Program) and self._text == other._text

    def __hash__(self) -> int:
        return hash(self._text)

    def __repr__(self) -> str:
        fns = ", ".join(f.name for f in self.functions)
        return f"<Program functions=[{fns}] globals={len(self.globals)}>"

    # -- layout lookups ----------------------------------------------------

    def statement_id_of(self, uid: int) -> StatementId:
        return self._uid_to_sid[uid]

    def has_statement_uid(self, uid: int) -> bool:
        return uid in self._uid_to_sid

    def statement_at(self, sid: StatementId) -> Stmt:
        return self._fn_line_to_stmt[sid.function][sid.line]

    def function_line_count(self, name: str) -> int:
        return self._fn_line_count[name]

    def statement_count(self) -> int:
        return sum(1 for f in self.functions for _ in walk_statements(f.body))

    def all_statements(self) -> Iterator[Stmt]:
        for f in self.functions:
            yield from walk_statements(f.body)

    def global_map(self) -> dict:
        return {g.name: g for g in self.globals}
