"""A tiny imperative language with a deterministic, tracing interpreter.

The language exists so that crash triage can be studied end to end: programs
are parsed from text, rendered back to a canonical form, and executed on a
byte-string input under a step budget.  Execution produces a statement trace,
AFL-style edge counts, and, on failure, a fingerprint naming the failure
kind, the crashing statement, and the call stack.
"""

from .errors import (
    DuplicateFunctionError,
    MiniLangError,
    MiniLangRuntimeError,
    MiniLangSyntaxError,
    MissingMainError,
)
from .interp import (
    DEFAULT_STEP_BUDGET,
    MAX_CALL_DEPTH,
    ExecutionOutcome,
    ExecutionStatus,
    bucket_edges,
    bucket_index,
    execute,
)
from .nodes import (
    FailureFingerprint,
    FailureKind,
    FunctionDef,
    Program,
    StackFrame,
    StatementId,
)
from .parser import parse
from .render import render

__all__ = [
    "DEFAULT_STEP_BUDGET",
    "MAX_CALL_DEPTH",
    "DuplicateFunctionError",
    "ExecutionOutcome",
    "ExecutionStatus",
    "FailureFingerprint",
    "FailureKind",
    "FunctionDef",
    "MiniLangError",
    "MiniLangRuntimeError",
    "MiniLangSyntaxError",
    "MissingMainError",
    "Program",
    "StackFrame",
    "StatementId",
    "bucket_edges",
    "bucket_index",
    "execute",
    "parse",
    "render",
]
