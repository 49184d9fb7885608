"""Recursive-descent parser for ``.svl`` model files.

The parser stops at the first error and reports it as a single
:class:`~svtl.errors.Diagnostic` inside a :class:`~svtl.errors.SpecError`;
it never lets any other exception escape, whatever the input bytes.
"""

from __future__ import annotations

from fractions import Fraction

from ..errors import Diagnostic, SpecError
from . import ast
from .lexer import SORTS, Token, tokenize

TEMPORAL_KEYWORDS = ("next", "possible_next", "always", "globally", "eventually")
COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    # -- token helpers -------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    @property
    def prev(self) -> Token:
        return self.toks[self.i - 1]

    def error(self, message, tok=None):
        tok = tok or self.tok
        raise SpecError([Diagnostic(message, tok.line, tok.col, "syntax")])

    def at(self, text, kind=None):
        t = self.tok
        return t.text == text and (kind is None or t.kind == kind) and t.kind != "ident"

    def at_kw(self, word):
        return self.tok.kind == "keyword" and self.tok.text == word

    def advance(self):
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text):
        if self.tok.text != text or self.tok.kind in ("ident", "number"):
            self.error(f"expected {text!r}, found {self.tok}")
        return self.advance()

    def expect_ident(self, what="identifier"):
        if self.tok.kind != "ident":
            self.error(f"expected {what}, found {self.tok}")
        return self.advance()

    def span(self, start: Token):
        end = self.prev
        return ast.Span(start.line, start.col, end.line, end.col + len(end.text))

    # -- forms ---------------------------------------------------------

    def model(self):
        start = self.tok
        forms = []
        while self.tok.kind != "eof":
            forms.append(self.form(top=True))
        return ast.SourceModel(tuple(forms), span=self.span(start) if forms else None)

    def form(self, top=False):
        t = self.tok
        if t.kind != "keyword":
            self.error(f"expected a declaration, found {t}")
        method = getattr(self, "form_" + t.text, None)
        if method is None:
            self.error(f"expected a declaration, found {t}")
        return method()

    def block(self):
        opening = self.expect("{")
        forms = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unbalanced '{': missing '}'", opening)
            forms.append(self.form())
        self.expect("}")
        return tuple(forms)

    def form_const(self):
        start = self.advance()
        name = self.expect_ident().text
        self.expect("=")
        value = self.expr()
        return ast.ConstDecl(name, value, span=self.span(start))

    def form_domain(self):
        start = self.advance()
        name = self.expect_ident().text
        self.expect("=")
        if self.at("{"):
            self.advance()
            elems = [self.domain_elem()]
            while self.at(","):
                self.advance()
                elems.append(self.domain_elem())
            self.expect("}")
            return ast.DomainSet(name, tuple(elems), span=self.span(start))
        lo = self.additive()
        self.expect("..")
        hi = self.additive()
        return ast.DomainRange(name, lo, hi, span=self.span(start))

    def domain_elem(self):
        t = self.tok
        if t.kind == "number":
            self.advance()
            return ast.Num(Fraction(t.text), span=self.span(t))
        if t.kind == "ident":
            self.advance()
            return ast.Name(t.text, span=self.span(t))
        self.error(f"expected a domain element, found {t}")

    def form_alphabet(self):
        start = self.advance()
        sigs = []
        while self.at("("):
            s = self.advance()
            head = self.expect_ident("event head").text
            doms = []
            while self.tok.kind == "ident":
                doms.append(self.advance().text)
            self.expect(")")
            sigs.append(ast.EventSig(head, tuple(doms), span=self.span(s)))
        if not sigs:
            self.error("expected at least one event signature such as (tick)")
        return ast.AlphabetDecl(tuple(sigs), span=self.span(start))

    def form_measure(self):
        start = self.advance()
        clauses = self.clauses(self.expr)
        return ast.MeasureDecl(clauses, span=self.span(start))

    def form_var(self):
        start = self.advance()
        name = self.decl_name()
        self.expect(":")
        t = self.tok
        if not (t.kind == "keyword" and t.text in SORTS):
            self.error(f"expected a sort ({', '.join(SORTS)}), found {t}")
        self.advance()
        if not self.at_kw("init"):
            self.error(f"expected 'init', found {self.tok}")
        self.advance()
        init = self.expr()
        clauses = self.clauses(self.expr)
        return ast.VarDecl(name, t.text, init, clauses, span=self.span(start))

    def form_guard(self):
        start = self.advance()
        pat = self.pattern()
        if not self.at_kw("when"):
            self.error(f"expected 'when', found {self.tok}")
        self.advance()
        cond = self.expr()
        return ast.GuardDecl(pat, cond, span=self.span(start))

    def form_export(self):
        start = self.advance()
        names = [self.expect_ident().text]
        while self.at(","):
            self.advance()
            names.append(self.expect_ident().text)
        return ast.ExportDecl(tuple(names), span=self.span(start))

    def form_component(self):
        start = self.advance()
        name = self.decl_name()
        body = self.block()
        return ast.ComponentDecl(name, body, span=self.span(start))

    def form_project(self):
        start = self.advance()
        name = self.decl_name()
        if not self.at_kw("into"):
            self.error(f"expected 'into', found {self.tok}")
        self.advance()
        comp = self.decl_name()
        if not self.at_kw("freeze"):
            self.error(f"expected 'freeze', found {self.tok}")
        self.advance()
        freeze = self.expr()
        if not self.at_kw("emit"):
            self.error(f"expected 'emit', found {self.tok}")
        self.advance()
        emits = self.clauses(self.event_expr)
        return ast.ProjectDecl(name, comp, freeze, emits, span=self.span(start))

    def form_property(self):
        start = self.advance()
        name = self.decl_name()
        self.expect("=")
        formula = self.expr()
        return ast.PropertyDecl(name, formula, span=self.span(start))

    def form_forall(self):
        start = self.advance()
        var = self.expect_ident().text
        if not self.at_kw("in"):
            self.error(f"expected 'in', found {self.tok}")
        self.advance()
        dom = self.expect_ident("domain name").text
        body = self.block()
        return ast.Forall(var, dom, body, span=self.span(start))

    def decl_name(self):
        t = self.expect_ident()
        indices = ()
        if self.at("["):
            indices = self.index_list()
        return ast.Name(t.text, indices, span=self.span(t))

    # -- clauses and patterns -----------------------------------------

    def clauses(self, body):
        opening = self.expect("{")
        out = [self.clause(body)]
        while self.at("|"):
            self.advance()
            out.append(self.clause(body))
        if self.tok.kind == "eof":
            self.error("unbalanced '{': missing '}'", opening)
        self.expect("}")
        return tuple(out)

    def clause(self, body):
        start = self.tok
        if self.at_kw("otherwise"):
            self.advance()
            self.expect("->")
            return ast.Clause(body(), otherwise=True, span=self.span(start))
        pattern = guard = None
        if self.at_kw("on"):
            self.advance()
            pattern = self.pattern()
        if self.at_kw("when"):
            self.advance()
            guard = self.expr()
        if pattern is None and guard is None:
            self.error(f"expected 'on', 'when' or 'otherwise', found {self.tok}")
        self.expect("->")
        return ast.Clause(body(), pattern, guard, span=self.span(start))

    def pattern(self):
        start = self.expect("(")
        head = self.expect_ident("event head").text
        args = []
        while not self.at(")"):
            t = self.tok
            if t.kind == "number":
                self.advance()
                args.append(ast.Num(Fraction(t.text), span=self.span(t)))
            elif t.kind == "ident":
                self.advance()
                args.append(ast.Name(t.text, span=self.span(t)))
            else:
                self.error(f"expected a pattern argument, found {t}")
        self.expect(")")
        return ast.Pattern(head, tuple(args), span=self.span(start))

    def event_expr(self):
        start = self.expect("(")
        head = self.expect_ident("event head").text
        args = []
        while not self.at(")"):
            if self.tok.kind == "eof":
                self.error("unbalanced '(': missing ')'", start)
            args.append(self.expr())
        self.expect(")")
        return ast.EventExpr(head, tuple(args), span=self.span(start))

    # -- expressions ---------------------------------------------------

    def expr(self):
        return self.implies()

    def implies(self):
        start = self.tok
        left = self.or_()
        if self.at_kw("implies"):
            self.advance()
            right = self.implies()
            return ast.Binary("implies", left, right, span=self.span(start))
        return left

    def or_(self):
        start = self.tok
        left = self.and_()
        while self.at_kw("or"):
            self.advance()
            left = ast.Binary("or", left, self.and_(), span=self.span(start))
        return left

    def and_(self):
        start = self.tok
        left = self.prefix()
        while self.at_kw("and"):
            self.advance()
            left = ast.Binary("and", left, self.prefix(), span=self.span(start))
        return left

    def prefix(self):
        start = self.tok
        if start.kind == "keyword":
            w = start.text
            if w == "not":
                self.advance()
                return ast.Unary("not", self.prefix(), span=self.span(start))
            if w in TEMPORAL_KEYWORDS:
                self.advance()
                return ast.Temporal(w, self.prefix(), span=self.span(start))
            if w == "within":
                self.advance()
                t = self.tok
                if t.kind == "number":
                    self.advance()
                    n = ast.Num(Fraction(t.text), span=self.span(t))
                elif t.kind == "ident":
                    self.advance()
                    n = ast.Name(t.text, span=self.span(t))
                else:
                    self.error(f"expected a step count after 'within', found {t}")
                return ast.Temporal("within", self.prefix(), n, span=self.span(start))
            if w == "bounded":
                self.advance()
                var = self.decl_name()
                limit = None
                if self.at("<"):
                    self.advance()
                    limit = self.additive()
                return ast.Bounded(var, limit, span=self.span(start))
        return self.comparison()

    def comparison(self):
        start = self.tok
        left = self.additive()
        if self.tok.kind == "op" and self.tok.text in COMPARISONS:
            op = self.advance().text
            right = self.additive()
            left = ast.Binary(op, left, right, span=self.span(start))
            if self.tok.kind == "op" and self.tok.text in COMPARISONS:
                self.error("comparisons do not chain; add parentheses")
        return left

    def additive(self):
        start = self.tok
        left = self.multiplicative()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.advance().text
            left = ast.Binary(op, left, self.multiplicative(), span=self.span(start))
        return left

    def multiplicative(self):
        start = self.tok
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.advance().text
            left = ast.Binary(op, left, self.unary(), span=self.span(start))
        return left

    def unary(self):
        start = self.tok
        if self.at("-"):
            self.advance()
            return ast.Unary("-", self.unary(), span=self.span(start))
        return self.primary()

    def primary(self):
        t = self.tok
        if t.kind == "number":
            self.advance()
            return ast.Num(Fraction(t.text), span=self.span(t))
        if t.kind == "keyword" and t.text in ("true", "false"):
            self.advance()
            return ast.Bool(t.text == "true", span=self.span(t))
        if t.kind == "ident":
            self.advance()
            if self.at("(") and self.tok.adjacent:
                self.advance()
                args = [self.expr()]
                while self.at(","):
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                return ast.Call(t.text, tuple(args), span=self.span(t))
            indices = ()
            if self.at("["):
                indices = self.index_list()
            primed = False
            if self.at("'") and self.tok.adjacent:
                self.advance()
                primed = True
            return ast.Name(t.text, indices, primed, span=self.span(t))
        if self.at("("):
            opening = self.advance()
            e = self.expr()
            if self.tok.kind == "eof":
                self.error("unbalanced '(': missing ')'", opening)
            self.expect(")")
            return e
        self.error(f"expected an expression, found {t}")

    def index_list(self):
        self.expect("[")
        out = [self.expr()]
        while self.at(","):
            self.advance()
            out.append(self.expr())
        self.expect("]")
        return tuple(out)


def _run(text, entry):
    try:
        if isinstance(text, (bytes, bytearray)):
            try:
                text = bytes(text).decode("utf-8")
            except UnicodeDecodeError as exc:
                raise SpecError([Diagnostic(f"input is not UTF-8: {exc.reason}", 1, exc.start + 1, "lexical")])
        p = _Parser(tokenize(text))
        result = entry(p)
        if p.tok.kind != "eof":
            p.error(f"unexpected {p.tok}")
        return result
    except RecursionError:
        raise SpecError([Diagnostic("input nested too deeply", 0, 0, "syntax")]) from None


def parse(text) -> ast.SourceModel:
    """Parse a model source (str or bytes) into a :class:`SourceModel`."""
    return _run(text, _Parser.model)


def parse_expr(text) -> ast.Expr:
    return _run(text, _Parser.expr)
