"""Canonical pretty-printer; ``parse(pretty_print(m)) == m`` for every AST.

Comments are not part of the AST and are therefore not reproduced.
"""

from __future__ import annotations

from fractions import Fraction

from ..kernel import format_value
from . import ast

_PREC = {"implies": 1, "or": 2, "and": 3, "=": 5, "!=": 5, "<": 5, "<=": 5, ">": 5,
         ">=": 5, "+": 6, "-": 6, "*": 7, "/": 7}
_PREFIX = 4
_UNARY_MINUS = 8
_ATOM = 9
INDENT = "  "


def format_number(q: Fraction) -> str:
    """Exact decimal rendering; numeric literals only ever hold decimals."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    den, k = q.denominator, 0
    while 10 ** k % den:
        k += 1
        if k > 64:
            raise ValueError(f"{q} has no finite decimal expansion")
    sign = "-" if q < 0 else ""
    digits = str(abs(q.numerator) * (10 ** k // den)).rjust(k + 1, "0")
    return sign + digits[:-k] + "." + digits[-k:]


def prec(e) -> int:
    if isinstance(e, ast.Binary):
        return _PREC[e.op]
    if isinstance(e, ast.Unary):
        return _PREFIX if e.op == "not" else _UNARY_MINUS
    if isinstance(e, (ast.Temporal, ast.Bounded)):
        return _PREFIX
    return _ATOM


def expr(e, min_prec=0) -> str:
    s = _expr(e)
    return f"({s})" if prec(e) < min_prec else s


def _expr(e) -> str:
    if isinstance(e, ast.Num):
        return format_number(e.value)
    if isinstance(e, ast.Bool):
        return "true" if e.value else "false"
    if isinstance(e, ast.Lit):
        return format_value(e.value)
    if isinstance(e, ast.Name):
        return name(e) + ("'" if e.primed else "")
    if isinstance(e, ast.Call):
        return f"{e.func}({', '.join(expr(a) for a in e.args)})"
    if isinstance(e, ast.Unary):
        if e.op == "not":
            return "not " + expr(e.operand, _PREFIX)
        return "-" + expr(e.operand, _UNARY_MINUS)
    if isinstance(e, ast.Temporal):
        if e.op == "within":
            return f"within {expr(e.bound)} {expr(e.operand, _PREFIX)}"
        return f"{e.op} {expr(e.operand, _PREFIX)}"
    if isinstance(e, ast.Bounded):
        s = "bounded " + name(e.var)
        if e.limit is not None:
            s += " < " + expr(e.limit, _PREC["+"])
        return s
    if isinstance(e, ast.Binary):
        p = _PREC[e.op]
        if e.op == "implies":
            lp, rp = p + 1, p
        elif p == 5:
            lp, rp = p + 1, p + 1
        else:
            lp, rp = p, p + 1
        return f"{expr(e.left, lp)} {e.op} {expr(e.right, rp)}"
    raise TypeError(f"not an expression: {e!r}")


def name(n: ast.Name) -> str:
    if not n.indices:
        return n.ident
    return f"{n.ident}[{', '.join(expr(i) for i in n.indices)}]"


def pattern(p: ast.Pattern) -> str:
    return "(" + " ".join([p.head, *(expr(a) for a in p.args)]) + ")"


def event_expr(e: ast.EventExpr) -> str:
    # a parenthesised argument right after a bare name would read as a call
    return "(" + " ".join([e.head, *(f"({expr(a)})" if prec(a) < _ATOM or isinstance(a, ast.Unary)
                                     else expr(a) for a in e.args)]) + ")"


def clause(c: ast.Clause) -> str:
    body = event_expr(c.body) if isinstance(c.body, ast.EventExpr) else expr(c.body)
    if c.otherwise:
        return f"otherwise -> {body}"
    parts = []
    if c.pattern is not None:
        parts.append("on " + pattern(c.pattern))
    if c.guard is not None:
        parts.append("when " + expr(c.guard))
    return " ".join(parts) + " -> " + body


def clauses(cs, depth) -> str:
    pad = INDENT * (depth + 1)
    lines = [pad + clause(cs[0])]
    lines.extend(pad + "| " + clause(c) for c in cs[1:])
    return "{\n" + "\n".join(lines) + "\n" + INDENT * depth + "}"


def form(f, depth=0) -> str:
    pad = INDENT * depth
    if isinstance(f, ast.ConstDecl):
        return f"{pad}const {f.name} = {expr(f.value)}"
    if isinstance(f, ast.DomainRange):
        return f"{pad}domain {f.name} = {expr(f.lo, 6)}..{expr(f.hi, 6)}"
    if isinstance(f, ast.DomainSet):
        return f"{pad}domain {f.name} = {{{', '.join(expr(x) for x in f.elements)}}}"
    if isinstance(f, ast.AlphabetDecl):
        sigs = ("(" + " ".join([s.head, *s.domains]) + ")" for s in f.sigs)
        return f"{pad}alphabet {' '.join(sigs)}"
    if isinstance(f, ast.MeasureDecl):
        return f"{pad}measure {clauses(f.clauses, depth)}"
    if isinstance(f, ast.VarDecl):
        return (f"{pad}var {name(f.name)} : {f.sort} init {expr(f.init)} "
                f"{clauses(f.clauses, depth)}")
    if isinstance(f, ast.GuardDecl):
        return f"{pad}guard {pattern(f.pattern)} when {expr(f.cond)}"
    if isinstance(f, ast.ExportDecl):
        return f"{pad}export {', '.join(f.names)}"
    if isinstance(f, ast.ComponentDecl):
        return f"{pad}component {name(f.name)} {block(f.body, depth)}"
    if isinstance(f, ast.ProjectDecl):
        return (f"{pad}project {name(f.name)} into {name(f.component)} "
                f"freeze {expr(f.freeze)} emit {clauses(f.emits, depth)}")
    if isinstance(f, ast.PropertyDecl):
        return f"{pad}property {name(f.name)} = {expr(f.formula)}"
    if isinstance(f, ast.Forall):
        return f"{pad}forall {f.var} in {f.domain} {block(f.body, depth)}"
    raise TypeError(f"not a declaration: {f!r}")


def block(forms, depth) -> str:
    if not forms:
        return "{\n" + INDENT * depth + "}"
    inner = "\n".join(form(f, depth + 1) for f in forms)
    return "{\n" + inner + "\n" + INDENT * depth + "}"


def pretty_print(sm: ast.SourceModel) -> str:
    return "".join(form(f) + "\n" for f in sm.forms)
