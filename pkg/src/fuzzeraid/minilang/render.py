"""Canonical rendering: one statement per line, two-space indents, no
comments, no blank lines.

The renderer is the source of truth for statement line numbers.  Each
function block is numbered on its own, starting at 1 on the ``fn`` header,
so dropping or reordering whole functions never disturbs the ids of the
statements that remain.
"""

from __future__ import annotations

from . import nodes as N

# Binding strength per binary operator; higher binds tighter.  All binary
# operators are left-associative.
_PREC = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 4,
    "<=": 4,
    ">": 4,
    ">=": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
    "%": 6,
}
_UNARY_PREC = 7


def render_expr(e, parent_prec: int = 0) -> str:
    if isinstance(e, N.IntLit):
        return str(e.value)
    if isinstance(e, N.Ident):
        return e.name
    if isinstance(e, N.NullLit):
        return "null"
    if isinstance(e, N.Deref):
        return f"*{e.name}"
    if isinstance(e, N.AddrOf):
        return f"&{e.name}"
    if isinstance(e, N.Index):
        return f"{e.name}[{render_expr(e.index)}]"
    if isinstance(e, N.InputByte):
        return f"input({render_expr(e.index)})"
    if isinstance(e, N.Call):
        return f"{e.callee}({', '.join(render_expr(a) for a in e.args)})"
    if isinstance(e, N.Unary):
        return f"{e.op}{render_expr(e.operand, _UNARY_PREC)}"
    if isinstance(e, N.Binary):
        p = _PREC[e.op]
        left = render_expr(e.left, p)
        right = render_expr(e.right, p + 1)  # left-assoc: parenthesize equal-prec right
        s = f"{left} {e.op} {right}"
        return f"({s})" if p < parent_prec else s
    raise TypeError(f"not an expression node: {e!r}")


def _render_lvalue(lv: N.LValue) -> str:
    if lv.kind == "name":
        return lv.name
    if lv.kind == "deref":
        return f"*{lv.name}"
    if lv.kind == "index":
        return f"{lv.name}[{render_expr(lv.index)}]"
    raise ValueError(f"bad lvalue kind {lv.kind!r}")


def _stmt_line(stmt) -> str:
    """Single-line text of a non-compound statement (no indent, with ';')."""
    if isinstance(stmt, N.VarDecl):
        head = f"array[{stmt.size}] {stmt.name}" if stmt.kind == "array" else f"{stmt.kind} {stmt.name}"
        if stmt.init is not None:
            return f"{head} = {render_expr(stmt.init)};"
        return f"{head};"
    if isinstance(stmt, N.Assign):
        return f"{_render_lvalue(stmt.target)} = {render_expr(stmt.value)};"
    if isinstance(stmt, N.CallStmt):
        return f"{render_expr(stmt.call)};"
    if isinstance(stmt, N.Return):
        if stmt.value is None:
            return "return;"
        return f"return {render_expr(stmt.value)};"
    if isinstance(stmt, N.Free):
        return f"free({stmt.name});"
    if isinstance(stmt, N.AssertStmt):
        return f"assert({render_expr(stmt.cond)});"
    raise TypeError(f"not a simple statement: {stmt!r}")


def _layout_function(fn) -> tuple:
    """Render one function; returns (lines, uid_to_line, line_to_stmt)."""
    lines = [f"fn {fn.name}({', '.join(fn.params)}) {{"]
    uid_to_line: dict = {}
    line_to_stmt: dict = {}

    def emit(stmts, depth: int) -> None:
        pad = "  " * depth
        for s in stmts:
            if isinstance(s, N.If):
                lines.append(f"{pad}if ({render_expr(s.cond)}) {{")
                uid_to_line[s.uid] = len(lines)
                line_to_stmt[len(lines)] = s
                emit(s.then_body, depth + 1)
                if s.else_body:
                    lines.append(f"{pad}}} else {{")
                    emit(s.else_body, depth + 1)
                lines.append(f"{pad}}}")
            elif isinstance(s, N.While):
                lines.append(f"{pad}while ({render_expr(s.cond)}) {{")
                uid_to_line[s.uid] = len(lines)
                line_to_stmt[len(lines)] = s
                emit(s.body, depth + 1)
                lines.append(f"{pad}}}")
            else:
                lines.append(f"{pad}{_stmt_line(s)}")
                uid_to_line[s.uid] = len(lines)
                line_to_stmt[len(lines)] = s

    emit(fn.body, 1)
    lines.append("}")
    return lines, uid_to_line, line_to_stmt


def _layout_program(program) -> tuple:
    """Full canonical text plus per-function line tables."""
    out_lines = []
    for g in program.globals:
        out_lines.append(f"global {g.name} = {g.value};")
    fn_uid_to_line: dict = {}
    fn_line_to_stmt: dict = {}
    fn_line_count: dict = {}
    for fn in program.functions:
        lines, uid_to_line, line_to_stmt = _layout_function(fn)
        fn_uid_to_line[fn.name] = uid_to_line
        fn_line_to_stmt[fn.name] = line_to_stmt
        fn_line_count[fn.name] = len(lines)
        out_lines.extend(lines)
    text = "\n".join(out_lines) + ("\n" if out_lines else "")
    return text, fn_uid_to_line, fn_line_to_stmt, fn_line_count


def render(program) -> str:
    """Canonical text of a program."""
    return program.canonical_text
