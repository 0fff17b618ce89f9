"""Error types for parsing and for host-level execution problems.

Modeled runtime failures (null dereference, division by zero, and so on) are
never exceptions at the API boundary; they come back as data inside an
ExecutionOutcome.  Exceptions here mean the program itself was unusable.
"""

from __future__ import annotations


class MiniLangError(Exception):
    """Base class for every error this package raises about a program."""


class MiniLangSyntaxError(MiniLangError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col


class DuplicateFunctionError(MiniLangError):
    def __init__(self, name: str, line: int):
        super().__init__(f"function {name!r} defined more than once (line {line})")
        self.name = name


class MissingMainError(MiniLangError):
    def __init__(self):
        super().__init__("program defines no 'main' function")


class MiniLangRuntimeError(MiniLangError):
    """Host error: the program did something outside the semantics, such as
    reading an unbound name, calling a missing function, or mixing types.
    These indicate an invalid program, not a modeled failure.
    """
