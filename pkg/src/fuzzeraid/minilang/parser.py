"""Hand-rolled lexer and recursive-descent parser.

Accepts free-form whitespace and ``//`` line comments; the canonical renderer
strips both, so any two sources that differ only in layout or comments parse
to render-identical programs.
"""

from __future__ import annotations

from . import nodes as N
from .errors import DuplicateFunctionError, MiniLangSyntaxError, MissingMainError

_KEYWORDS = {
    "global", "fn", "if", "else", "while", "return",
    "free", "assert", "int", "ptr", "array", "input", "null",
}

_TWO_CHAR = {"==", "!=", "<=", ">=", "&&", "||"}
_ONE_CHAR = set("+-*/%<>=!&;,(){}[]")

_ESCAPES = {"n": 10, "t": 9, "0": 0, "'": 39, "\\": 92}


class _Token:
    __slots__ = ("kind", "text", "value", "line", "col")

    def __init__(self, kind, text, value, line, col):
        self.kind = kind  # "ident" | "kw" | "int" | "op" | "eof"
        self.text = text
        self.value = value
        self.line = line
        self.col = col

    def __repr__(self):
        return f"_Token({self.kind!r}, {self.text!r} @{self.line}:{self.col})"


def _tokenize(source: str):
    tokens = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            kind = "kw" if text in _KEYWORDS else "ident"
            tokens.append(_Token(kind, text, None, start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(_Token("int", source[i:j], int(source[i:j]), start_line, start_col))
            col += j - i
            i = j
            continue
        if c == "'":
            # char literal, normalized to its integer value
            j = i + 1
            if j < n and source[j] == "\\":
                if j + 1 >= n or source[j + 1] not in _ESCAPES:
                    raise MiniLangSyntaxError("bad escape in char literal", line, col)
                value = _ESCAPES[source[j + 1]]
                j += 2
            elif j < n and source[j] != "'":
                value = ord(source[j])
                j += 1
            else:
                raise MiniLangSyntaxError("empty char literal", line, col)
            if j >= n or source[j] != "'":
                raise MiniLangSyntaxError("unterminated char literal", line, col)
            tokens.append(_Token("int", source[i : j + 1], value, start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        two = source[i : i + 2]
        if two in _TWO_CHAR:
            tokens.append(_Token("op", two, None, start_line, start_col))
            i += 2
            col += 2
            continue
        if c in _ONE_CHAR:
            tokens.append(_Token("op", c, None, start_line, start_col))
            i += 1
            col += 1
            continue
        raise MiniLangSyntaxError(f"unexpected character {c!r}", line, col)
    tokens.append(_Token("eof", "", None, line, col))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.next_uid = 0

    # -- token helpers ------------------------------------------------------

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, msg: str, tok: _Token | None = None):
        tok = tok or self.peek()
        raise MiniLangSyntaxError(msg, tok.line, tok.col)

    def expect_op(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            self.error(f"expected {text!r}, found {tok.text!r}")
        return self.advance()

    def expect_kw(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind != "kw" or tok.text != text:
            self.error(f"expected {text!r}, found {tok.text!r}")
        return self.advance()

    def expect_ident(self) -> str:
        tok = self.peek()
        if tok.kind != "ident":
            self.error(f"expected identifier, found {tok.text!r}")
        return self.advance().text

    def at_op(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.text == text

    def at_kw(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "kw" and tok.text == text

    def take_uid(self) -> int:
        self.next_uid += 1
        return self.next_uid

    # -- grammar ------------------------------------------------------------

    def parse_program(self) -> N.Program:
        globals_, functions, seen = [], [], set()
        while self.peek().kind != "eof":
            if self.at_kw("global"):
                globals_.append(self.parse_global())
            elif self.at_kw("fn"):
                tok = self.peek()
                fn = self.parse_function()
                if fn.name in seen:
                    raise DuplicateFunctionError(fn.name, tok.line)
                seen.add(fn.name)
                functions.append(fn)
            else:
                self.error(f"expected 'global' or 'fn', found {self.peek().text!r}")
        return N.Program(globals_, functions)

    def parse_global(self) -> N.GlobalDecl:
        self.expect_kw("global")
        name = self.expect_ident()
        value = 0
        if self.at_op("="):
            self.advance()
            value = self.parse_int_literal()
        self.expect_op(";")
        return N.GlobalDecl(self.take_uid(), name, value)

    def parse_int_literal(self) -> int:
        neg = False
        if self.at_op("-"):
            self.advance()
            neg = True
        tok = self.peek()
        if tok.kind != "int":
            self.error(f"expected integer, found {tok.text!r}")
        self.advance()
        return -tok.value if neg else tok.value

    def parse_function(self) -> N.FunctionDef:
        self.expect_kw("fn")
        name = self.expect_ident()
        self.expect_op("(")
        params = []
        if not self.at_op(")"):
            params.append(self.expect_ident())
            while self.at_op(","):
                self.advance()
                params.append(self.expect_ident())
        self.expect_op(")")
        body = self.parse_block()
        return N.FunctionDef(name, params, body)

    def parse_block(self) -> list:
        self.expect_op("{")
        stmts = []
        while not self.at_op("}"):
            if self.peek().kind == "eof":
                self.error("unexpected end of input inside block")
            stmts.append(self.parse_statement())
        self.expect_op("}")
        return stmts

    def parse_statement(self):
        tok = self.peek()
        if tok.kind == "kw":
            if tok.text in ("int", "ptr", "array"):
                return self.parse_decl()
            if tok.text == "if":
                return self.parse_if()
            if tok.text == "while":
                return self.parse_while()
            if tok.text == "return":
                self.advance()
                value = None
                if not self.at_op(";"):
                    value = self.parse_expr()
                self.expect_op(";")
                return N.Return(self.take_uid(), value)
            if tok.text == "free":
                self.advance()
                self.expect_op("(")
                name = self.expect_ident()
                self.expect_op(")")
                self.expect_op(";")
                return N.Free(self.take_uid(), name)
            if tok.text == "assert":
                self.advance()
                self.expect_op("(")
                cond = self.parse_expr()
                self.expect_op(")")
                self.expect_op(";")
                return N.AssertStmt(self.take_uid(), cond)
            self.error(f"unexpected keyword {tok.text!r} at statement start")
        if tok.kind == "op" and tok.text == "*":
            self.advance()
            name = self.expect_ident()
            self.expect_op("=")
            value = self.parse_expr()
            self.expect_op(";")
            return N.Assign(self.take_uid(), N.LValue("deref", name), value)
        if tok.kind == "ident":
            name = self.advance().text
            if self.at_op("("):
                call = self.parse_call_tail(name)
                self.expect_op(";")
                return N.CallStmt(self.take_uid(), call)
            if self.at_op("["):
                self.advance()
                idx = self.parse_expr()
                self.expect_op("]")
                self.expect_op("=")
                value = self.parse_expr()
                self.expect_op(";")
                return N.Assign(self.take_uid(), N.LValue("index", name, idx), value)
            self.expect_op("=")
            value = self.parse_expr()
            self.expect_op(";")
            return N.Assign(self.take_uid(), N.LValue("name", name), value)
        self.error(f"expected a statement, found {tok.text!r}")

    def parse_decl(self) -> N.VarDecl:
        tok = self.advance()  # int | ptr | array
        kind = tok.text
        size = None
        if kind == "array":
            self.expect_op("[")
            size_tok = self.peek()
            if size_tok.kind != "int":
                self.error("array size must be an integer literal")
            size = self.advance().value
            self.expect_op("]")
        name = self.expect_ident()
        init = None
        if self.at_op("="):
            if kind == "array":
                self.error("array declarations take no initializer")
            self.advance()
            init = self.parse_expr()
        self.expect_op(";")
        return N.VarDecl(self.take_uid(), kind, name, size, init)

    def parse_if(self) -> N.If:
        self.expect_kw("if")
        self.expect_op("(")
        cond = self.parse_expr()
        self.expect_op(")")
        uid = self.take_uid()  # header owns the statement id
        then_body = self.parse_block()
        else_body = []
        if self.at_kw("else"):
            self.advance()
            else_body = self.parse_block()
        return N.If(uid, cond, then_body, else_body)

    def parse_while(self) -> N.While:
        self.expect_kw("while")
        self.expect_op("(")
        cond = self.parse_expr()
        self.expect_op(")")
        uid = self.take_uid()
        body = self.parse_block()
        return N.While(uid, cond, body)

    def parse_call_tail(self, name: str) -> N.Call:
        self.expect_op("(")
        args = []
        if not self.at_op(")"):
            args.append(self.parse_expr())
            while self.at_op(","):
                self.advance()
                args.append(self.parse_expr())
        self.expect_op(")")
        return N.Call(name, tuple(args))

    # Expression precedence ladder, loosest first.

    def parse_expr(self):
        return self.parse_or()

    def parse_or(self):
        left = self.parse_and()
        while self.at_op("||"):
            self.advance()
            left = N.Binary("||", left, self.parse_and())
        return left

    def parse_and(self):
        left = self.parse_equality()
        while self.at_op("&&"):
            self.advance()
            left = N.Binary("&&", left, self.parse_equality())
        return left

    def parse_equality(self):
        left = self.parse_relational()
        while self.at_op("==") or self.at_op("!="):
            op = self.advance().text
            left = N.Binary(op, left, self.parse_relational())
        return left

    def parse_relational(self):
        left = self.parse_additive()
        while self.peek().kind == "op" and self.peek().text in ("<", "<=", ">", ">="):
            op = self.advance().text
            left = N.Binary(op, left, self.parse_additive())
        return left

    def parse_additive(self):
        left = self.parse_multiplicative()
        while self.peek().kind == "op" and self.peek().text in ("+", "-"):
            op = self.advance().text
            left = N.Binary(op, left, self.parse_multiplicative())
        return left

    def parse_multiplicative(self):
        left = self.parse_unary()
        while self.peek().kind == "op" and self.peek().text in ("*", "/", "%"):
            op = self.advance().text
            left = N.Binary(op, left, self.parse_unary())
        return left

    def parse_unary(self):
        if self.at_op("-"):
            self.advance()
            operand = self.parse_unary()
            if isinstance(operand, N.IntLit):
                return N.IntLit(-operand.value)  # fold so rendering stays canonical
            return N.Unary("-", operand)
        if self.at_op("!"):
            self.advance()
            return N.Unary("!", self.parse_unary())
        return self.parse_primary()

    def parse_primary(self):
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            return N.IntLit(tok.value)
        if tok.kind == "kw" and tok.text == "null":
            self.advance()
            return N.NullLit()
        if tok.kind == "kw" and tok.text == "input":
            self.advance()
            self.expect_op("(")
            idx = self.parse_expr()
            self.expect_op(")")
            return N.InputByte(idx)
        if tok.kind == "op" and tok.text == "*":
            self.advance()
            return N.Deref(self.expect_ident())
        if tok.kind == "op" and tok.text == "&":
            self.advance()
            return N.AddrOf(self.expect_ident())
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect_op(")")
            return inner
        if tok.kind == "ident":
            name = self.advance().text
            if self.at_op("("):
                return self.parse_call_tail(name)
            if self.at_op("["):
                self.advance()
                idx = self.parse_expr()
                self.expect_op("]")
                return N.Index(name, idx)
            return N.Ident(name)
        self.error(f"expected an expression, found {tok.text!r}")


def parse(source: str, require_main: bool = False) -> N.Program:
    """Parse source text into a Program.

    With ``require_main`` the program must define ``main`` (raises
    MissingMainError otherwise), which is what every execution path wants.
    """
    program = _Parser(source).parse_program()
    if require_main and "main" not in program.function_map:
        raise MissingMainError()
    return program
