"""Static checks and compilation of a :class:`SourceModel` into a kernel Model.

Checks performed (each diagnostic names its rule):

* ``resolve``   every identifier is a variable, constant, binder or symbol
* ``sort``      operators, clause bodies, guards and inits have the right sort
* ``domain``    domains are finite and well formed; literals lie inside them
* ``otherwise`` every variable's clause list ends with an ``otherwise`` arm
* ``prime``     post-event reads only where an event is being applied, and
                never of the variable being updated
* ``cycle``     post-event reads are acyclic; update order is derived from them
* ``measure``   the measure is total and nonnegative
* ``arith``     constant expressions evaluate (no division by zero)
* ``emit``      emitted component events fit the component's alphabet
* ``duplicate`` names are declared once
"""

from __future__ import annotations

import heapq
import itertools
import operator
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .. import composition, temporal
from ..composition import ComponentDef, ComponentState, ProjectionDef
from ..errors import Diagnostic, EvalError, SpecError
from ..kernel import BOOL, COMPONENT, RAT, SYM, Event, Model, StateVarDef, format_value
from . import ast, printer
from .parser import parse, parse_expr

DYNAMIC = object()  # event known only at evaluation time (property atoms)
_NC = object()  # "not a compile-time constant"


class _Fail(Exception):
    pass


@dataclass
class _C:
    fn: object
    sort: str
    const: object = _NC


def _const(v, sort):
    return _C(lambda pre, post, ev: v, sort, v)


def _norm(v):
    """Expression-level value: integers become exact rationals."""
    if isinstance(v, bool) or isinstance(v, str):
        return v
    return Fraction(v)


def _sort_of(v):
    if isinstance(v, bool):
        return BOOL
    if isinstance(v, str):
        return SYM
    if isinstance(v, ComponentState):
        return COMPONENT
    return RAT


def _event_arg(v):
    if isinstance(v, Fraction):
        if v.denominator != 1:
            raise EvalError(f"event argument {v} is not an integer")
        return v.numerator
    return v


def flat_name(ident, index_values) -> str:
    if not index_values:
        return ident
    return f"{ident}[{','.join(format_value(v) for v in index_values)}]"


@dataclass
class Scope:
    consts: dict = field(default_factory=dict)
    domains: dict = field(default_factory=dict)
    symbols: set = field(default_factory=set)
    alphabet: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    measure: dict = field(default_factory=dict)
    families: dict = field(default_factory=dict)  # ident -> {index tuple: flat name}
    sorts: dict = field(default_factory=dict)  # flat name -> sort
    components: dict = field(default_factory=dict)
    projections: dict = field(default_factory=dict)  # flat name -> ComponentDef family info

    def child(self):
        return Scope(consts=dict(self.consts), domains=dict(self.domains), symbols=set(self.symbols),
                     components=self.components)


@dataclass
class _Ctx:
    bindings: dict
    event: object = None  # Event, DYNAMIC, or None (no event in scope)
    allow_state: bool = True
    allow_post: bool = False
    slots: Optional[dict] = None
    pre: set = field(default_factory=set)
    post: set = field(default_factory=set)
    uses_event: bool = False
    target: Optional[str] = None  # variable being updated


def _expand_subst(node, env, skip_ident=False):
    """Replace forall-bound names by literals (decl names keep their identifier)."""
    if isinstance(node, tuple):
        return tuple(_expand_subst(x, env) for x in node)
    if isinstance(node, ast.Name):
        if not skip_ident and not node.indices and not node.primed and node.ident in env:
            return ast.Lit(env[node.ident], span=node.span)
        return replace(node, indices=_expand_subst(node.indices, env))
    if isinstance(node, ast.Forall):
        inner = {k: v for k, v in env.items() if k != node.var}
        return replace(node, body=_expand_subst(node.body, inner))
    if not hasattr(node, "__dataclass_fields__") or isinstance(node, ast.Span):
        return node
    changes = {}
    for f in fields(node):
        if f.name == "span":
            continue
        val = getattr(node, f.name)
        decl_name = f.name in ("name", "component", "var") and isinstance(val, ast.Name)
        changes[f.name] = _expand_subst(val, env, skip_ident=decl_name)
    return replace(node, **changes)


class Checker:
    def __init__(self, overrides=None, name="model"):
        self.overrides = dict(overrides or {})
        self.name = name
        self.diags = []
        self._seen = set()

    # -- diagnostics ---------------------------------------------------

    def diag(self, node, message, rule):
        sp = getattr(node, "span", None)
        line, col = (sp.line, sp.col) if sp else (0, 0)
        key = (line, col, message)
        if key not in self._seen:
            self._seen.add(key)
            self.diags.append(Diagnostic(message, line, col, rule))

    def fail(self, node, message, rule):
        self.diag(node, message, rule)
        raise _Fail

    # -- entry ---------------------------------------------------------

    def run(self, sm: ast.SourceModel) -> Model:
        scope = Scope()
        forms = self.declarations(sm.forms, scope, top=True)
        unused = set(self.overrides) - set(scope.consts)
        for n in sorted(unused):
            self.diags.append(Diagnostic(f"override for undeclared constant {n!r}", 0, 0, "resolve"))
        model = self.build(forms, scope, sm, component=False)
        if self.diags:
            raise SpecError(self.diags)
        return model

    def declarations(self, forms, scope, top):
        """Evaluate consts and domains in order; return the remaining forms, forall-expanded."""
        rest = []
        for f in forms:
            try:
                if isinstance(f, ast.ConstDecl):
                    if f.name in scope.consts and f.name not in self.overrides:
                        self.fail(f, f"constant {f.name!r} declared twice", "duplicate")
                    if top and f.name in self.overrides:
                        scope.consts[f.name] = _norm(self.overrides[f.name])
                    else:
                        scope.consts[f.name] = self.const_value(f.value, scope, f"constant {f.name}")
                elif isinstance(f, (ast.DomainRange, ast.DomainSet)):
                    self.domain(f, scope)
                else:
                    rest.append(f)
            except _Fail:
                pass
        return self.expand(rest, scope, {})

    def expand(self, forms, scope, env):
        out = []
        for f in forms:
            if env:
                f = _expand_subst(f, env)
            if isinstance(f, ast.Forall):
                dom = scope.domains.get(f.domain)
                if dom is None:
                    self.diag(f, f"unknown domain {f.domain!r}", "resolve")
                    continue
                for v in dom:
                    out.extend(self.expand(f.body, scope, {f.var: v}))
            elif isinstance(f, (ast.ConstDecl, ast.DomainRange, ast.DomainSet)):
                if env:
                    self.diag(f, "constants and domains cannot be declared inside forall", "resolve")
                else:
                    out.append(f)
            else:
                out.append(f)
        return out

    def const_value(self, e, scope, what):
        ctx = _Ctx(bindings={}, event=None, allow_state=False)
        c = self.cexpr(e, ctx, scope)
        if c.const is _NC:
            self.fail(e, f"{what} must be a constant expression", "sort")
        return c.const

    def domain(self, f, scope):
        if f.name in scope.domains:
            self.fail(f, f"domain {f.name!r} declared twice", "duplicate")
        if isinstance(f, ast.DomainRange):
            lo = self.const_value(f.lo, scope, "range bound")
            hi = self.const_value(f.hi, scope, "range bound")
            for b in (lo, hi):
                if not isinstance(b, Fraction) or b.denominator != 1:
                    self.fail(f, f"domain {f.name!r}: range bounds must be integers", "domain")
            values = tuple(range(int(lo), int(hi) + 1))
        else:
            vals = []
            for el in f.elements:
                if isinstance(el, ast.Name) and el.ident not in scope.consts:
                    vals.append(el.ident)
                    continue
                v = self.const_value(el, scope, "domain element")
                if isinstance(v, Fraction) and v.denominator == 1:
                    vals.append(int(v))
                elif isinstance(v, str):
                    vals.append(v)
                else:
                    self.fail(el, "domain elements must be integers or symbols", "domain")
            if len(set(vals)) != len(vals):
                self.fail(f, f"domain {f.name!r} repeats an element", "domain")
            values = tuple(vals)
        if not values:
            self.fail(f, f"domain {f.name!r} is empty", "domain")
        kinds = {isinstance(v, str) for v in values}
        if len(kinds) > 1:
            self.fail(f, f"domain {f.name!r} mixes integers and symbols", "domain")
        scope.domains[f.name] = values
        scope.symbols.update(v for v in values if isinstance(v, str))

    # -- building a model ---------------------------------------------

    def build(self, forms, scope, source, component, name=None):
        by_kind = {}
        for f in forms:
            by_kind.setdefault(type(f), []).append(f)
        allowed_in_component = {ast.AlphabetDecl, ast.MeasureDecl, ast.VarDecl, ast.GuardDecl,
                                ast.ExportDecl}
        for kind, fs in by_kind.items():
            if component and kind not in allowed_in_component:
                for f in fs:
                    self.diag(f, f"{kind.__name__[:-4].lower()} not allowed inside a component", "resolve")
            if not component and kind is ast.ExportDecl:
                for f in fs:
                    self.diag(f, "export is only meaningful inside a component", "resolve")

        self.alphabet(by_kind.get(ast.AlphabetDecl, []), scope)
        if not component:
            for f in by_kind.get(ast.ComponentDecl, []):
                try:
                    self.component(f, scope)
                except _Fail:
                    pass
        self.measure(by_kind.get(ast.MeasureDecl, []), scope)

        decls = [f for f in forms if isinstance(f, (ast.VarDecl, ast.ProjectDecl))]
        if component:
            decls = [f for f in decls if isinstance(f, ast.VarDecl)]
        slots = self.declare_slots(decls, scope)

        # pass 1: dependencies (closures discarded), then a stable topological order
        dummy = {n: i for i, (n, _) in enumerate(slots)}
        deps = {}
        for n, f in slots:
            try:
                deps[n] = self.compile_slot(n, f, scope, dummy, probe=True)
            except _Fail:
                deps[n] = (set(), set())
        order = self.update_order(slots, deps)
        final = {n: i for i, n in enumerate(order)}
        decl_of = dict(slots)

        vars_ = []
        for n in order:
            f = decl_of[n]
            try:
                vars_.append(self.compile_slot(n, f, scope, final, probe=False))
            except _Fail:
                vars_.append(None)

        guards, guard_deps = self.guards(by_kind.get(ast.GuardDecl, []), scope, final)

        if self.diags or any(v is None for v in vars_):
            raise SpecError(self.diags or [Diagnostic("model has errors", 0, 0, "resolve")])

        model = Model(name=name or self.name, domains=scope.domains, alphabet=scope.alphabet,
                      measure=scope.measure, vars=vars_, guards=guards, guard_deps=guard_deps,
                      components=scope.components, consts=scope.consts, scope=self,
                      source=source)
        self._scope = scope
        self._slots = final
        self._model = model
        if component:
            return model
        if any(sig_head in (composition.SEND, composition.RECEIVE)
               for c in scope.components.values() for sig_head in c.model.alphabet):
            model.validate_step = composition.validate_rendezvous
        for f in by_kind.get(ast.PropertyDecl, []):
            try:
                pname = self.decl_flat(f.name, scope)
                if pname in model.properties:
                    self.fail(f, f"property {pname!r} declared twice", "duplicate")
                model.properties[pname] = self.compile_property(f.formula, scope, final)
            except _Fail:
                pass
        return model

    def alphabet(self, decls, scope):
        for d in decls:
            for sig in d.sigs:
                if sig.head in scope.alphabet:
                    self.diag(sig, f"event {sig.head!r} declared twice", "duplicate")
                    continue
                bad = [x for x in sig.domains if x not in scope.domains]
                if bad:
                    self.diag(sig, f"unknown domain {bad[0]!r} in signature of {sig.head!r}", "resolve")
                    continue
                scope.alphabet[sig.head] = sig.domains
        events = []
        for head, doms in scope.alphabet.items():
            for args in itertools.product(*(scope.domains[d] for d in doms)):
                events.append(Event(head, tuple(args)))
        scope.events = sorted(events, key=Event.sort_key)

    def measure(self, decls, scope):
        if len(decls) > 1:
            self.diag(decls[1], "measure declared twice", "duplicate")
        if not decls:
            scope.measure = {a: Fraction(1) for a in scope.events}
            return
        clauses = decls[0].clauses
        self.check_clause_list(clauses, "measure", required_otherwise=False)
        for c in clauses:
            if c.pattern is not None:
                self.check_pattern(c.pattern, scope)
        table = {}
        for a in scope.events:
            for c in clauses:
                b = self.match(c.pattern, a, scope) if c.pattern is not None else {}
                if b is None:
                    continue
                ctx = _Ctx(bindings=b, event=None, allow_state=False)
                try:
                    if c.guard is not None:
                        g = self.cexpr(c.guard, ctx, scope)
                        self.want(g, BOOL, c.guard)
                        if g.const is _NC:
                            self.fail(c.guard, "measure guards may depend only on the event", "measure")
                        if not g.const:
                            continue
                    v = self.cexpr(c.body, ctx, scope)
                    self.want(v, RAT, c.body)
                    if v.const is _NC:
                        self.fail(c.body, "a measure depends only on the event", "measure")
                    if v.const < 0:
                        self.fail(c.body, f"measure of {a} is negative", "measure")
                    table[a] = v.const
                except _Fail:
                    table[a] = Fraction(0)
                break
            else:
                self.diag(decls[0], f"measure is not defined for {a}", "measure")
                table[a] = Fraction(0)
        scope.measure = table

    def component(self, f, scope):
        cname = self.decl_flat(f.name, scope)
        if cname in scope.components:
            self.fail(f, f"component {cname!r} declared twice", "duplicate")
        sub = scope.child()
        inner = self.declarations(f.body, sub, top=False)
        sub_checker = Checker(name=cname)
        sub_checker.diags = self.diags
        sub_checker._seen = self._seen
        try:
            model = sub_checker.build(inner, sub, f, component=True, name=cname)
        except SpecError:
            raise _Fail from None
        exports = []
        for e in (x for x in inner if isinstance(x, ast.ExportDecl)):
            for n in e.names:
                if n not in model.index:
                    self.diag(e, f"component {cname!r} exports undeclared variable {n!r}", "resolve")
                elif n in exports:
                    self.diag(e, f"{n!r} exported twice", "duplicate")
                else:
                    exports.append(n)
        scope.components[cname] = ComponentDef(cname, model, tuple(exports))

    def decl_flat(self, name: ast.Name, scope):
        vals = []
        for i in name.indices:
            v = self.const_value(i, scope, "index")
            vals.append(_event_arg(v) if isinstance(v, Fraction) and v.denominator == 1 else v)
        return flat_name(name.ident, tuple(vals))

    def declare_slots(self, decls, scope):
        slots = []
        for f in decls:
            try:
                n = self.decl_flat(f.name, scope)
                key = tuple(_norm(self.const_value(i, scope, "index")) for i in f.name.indices)
                if n in scope.sorts:
                    self.fail(f, f"state variable {n!r} declared twice", "duplicate")
                fam = scope.families.setdefault(f.name.ident, {})
                if fam and len(next(iter(fam))) != len(key):
                    self.fail(f, f"{f.name.ident!r} used with different numbers of indices", "sort")
                if isinstance(f, ast.VarDecl):
                    sort = f.sort
                else:
                    comp = self.decl_flat(f.component, scope)
                    if comp not in scope.components:
                        self.fail(f.component, f"unknown component {comp!r}", "resolve")
                    sort = COMPONENT
                    scope.projections[n] = scope.components[comp]
                others = {scope.sorts[x] for x in fam.values()}
                if others and sort not in others:
                    self.fail(f, f"all members of {f.name.ident!r} must share one sort", "sort")
                fam[key] = n
                scope.sorts[n] = sort
                slots.append((n, f))
            except _Fail:
                pass
        return slots

    def update_order(self, slots, deps):
        names = [n for n, _ in slots]
        pos = {n: i for i, n in enumerate(names)}
        decl = dict(slots)
        for n in names:
            if n in deps[n][1]:
                self.diag(decl[n], f"{n!r} reads its own post-event value {n}'", "prime")
        succ = {n: [] for n in names}
        indeg = {n: 0 for n in names}
        for n in names:
            for m in deps[n][1]:
                if m != n and m in succ:
                    succ[m].append(n)
                    indeg[n] += 1
        heap = [pos[n] for n in names if indeg[n] == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            n = names[heapq.heappop(heap)]
            order.append(n)
            for m in succ[n]:
                indeg[m] -= 1
                if indeg[m] == 0:
                    heapq.heappush(heap, pos[m])
        if len(order) < len(names):
            stuck = [n for n in names if n not in set(order)]
            cycle = self.find_cycle(stuck, deps)
            self.diag(decl[cycle[0]], "post-event references form a cycle: "
                      + " -> ".join(f"{c}'" for c in cycle), "cycle")
            order.extend(stuck)
        return order

    @staticmethod
    def find_cycle(stuck, deps):
        stuck_set = set(stuck)
        n = stuck[0]
        path, seen = [], {}
        while n not in seen:
            seen[n] = len(path)
            path.append(n)
            n = next(m for m in sorted(deps[n][1]) if m in stuck_set and m != n)
        return path[seen[n]:] + [n]

    # -- clause compilation -------------------------------------------

    def check_clause_list(self, clauses, what, required_otherwise=True):
        for c in clauses[:-1]:
            if c.otherwise:
                self.diag(c, f"'otherwise' must be the last clause of {what}", "otherwise")
        if required_otherwise and not clauses[-1].otherwise:
            self.diag(clauses[-1], f"{what} has no 'otherwise' arm", "otherwise")

    def compile_slot(self, n, f, scope, slots, probe):
        if isinstance(f, ast.ProjectDecl):
            return self.compile_projection(n, f, scope, slots, probe)
        self.check_clause_list(f.clauses, f"variable {n!r}")
        if probe:
            for c in f.clauses:
                if c.pattern is not None:
                    self.check_pattern(c.pattern, scope)
        init_ctx = _Ctx(bindings={}, event=None, allow_state=False)
        init = self.cexpr(f.init, init_ctx, scope)
        self.want(init, f.sort, f.init)
        if init.const is _NC:
            self.fail(f.init, f"initial value of {n!r} must be constant", "sort")
        pre, post = set(), set()
        table = {}
        for a in scope.events:
            arms = []
            for c in f.clauses:
                b = self.match(c.pattern, a, scope) if c.pattern is not None else {}
                if b is None:
                    continue
                ctx = _Ctx(bindings=b, event=a, allow_post=True, slots=slots, target=n)
                g = None
                if c.guard is not None:
                    gc = self.cexpr(c.guard, ctx, scope)
                    self.want(gc, BOOL, c.guard)
                    if gc.const is True:
                        g = None
                    elif gc.const is False:
                        continue
                    else:
                        g = gc.fn
                body = self.cexpr(c.body, ctx, scope)
                self.want(body, f.sort, c.body)
                pre |= ctx.pre
                post |= ctx.post
                arms.append((g, body.fn))
                if g is None:
                    break
            table[a] = _make_update(n, arms, f.sort == RAT)
        if probe:
            return pre, post
        return StateVarDef(n, f.sort, init.const, table, frozenset(pre), frozenset(post))

    def compile_projection(self, n, f, scope, slots, probe):
        comp = scope.projections[n]
        self.check_clause_list(f.emits, f"emit rules of {n!r}", required_otherwise=False)
        if probe:
            for c in f.emits:
                if c.pattern is not None:
                    self.check_pattern(c.pattern, scope)
        pre, post = set(), set()
        freeze, emit = {}, {}
        for a in scope.events:
            ctx = _Ctx(bindings={}, event=a, allow_post=True, slots=slots, target=n)
            fz = self.cexpr(f.freeze, ctx, scope)
            self.want(fz, BOOL, f.freeze)
            freeze[a] = fz.fn
            arms = []
            for c in f.emits:
                b = self.match(c.pattern, a, scope) if c.pattern is not None else {}
                if b is None:
                    continue
                ctx2 = _Ctx(bindings=b, event=a, allow_post=True, slots=slots, target=n)
                g = None
                if c.guard is not None:
                    gc = self.cexpr(c.guard, ctx2, scope)
                    self.want(gc, BOOL, c.guard)
                    if gc.const is False:
                        continue
                    g = None if gc.const is True else gc.fn
                build = self.emit_builder(c.body, ctx2, scope, comp)
                pre |= ctx2.pre
                post |= ctx2.post
                arms.append((g, build))
                if g is None:
                    break
            emit[a] = arms
            pre |= ctx.pre
            post |= ctx.post
        if probe:
            return pre, post
        key = tuple(self.const_value(i, scope, "index") for i in f.name.indices)
        owner = _event_arg(key[0]) if len(key) == 1 else n
        proj = ProjectionDef(n, owner, comp, freeze, emit)

        def update_for(a):
            def update(pre_s, post_s, ctx, _a=a, _slot=slots[n]):
                return composition.project_step(proj, pre_s, post_s, _a, pre_s[_slot], ctx)
            return update

        table = {a: update_for(a) for a in scope.events}
        return StateVarDef(n, COMPONENT, comp.initial(), table, frozenset(pre), frozenset(post),
                           projection=proj)

    def emit_builder(self, ee: ast.EventExpr, ctx, scope, comp: ComponentDef):
        cm = comp.model
        if ee.head not in cm.alphabet:
            self.fail(ee, f"component {comp.name!r} has no event {ee.head!r}", "emit")
        doms = cm.alphabet[ee.head]
        if len(doms) != len(ee.args):
            self.fail(ee, f"({ee.head} ...) takes {len(doms)} arguments in {comp.name!r}", "emit")
        fns = []
        for arg, d in zip(ee.args, doms):
            c = self.cexpr(arg, ctx, scope)
            want = SYM if isinstance(cm.domains[d][0], str) else RAT
            self.want(c, want, arg)
            fns.append(c.fn)
        head = ee.head
        measure = cm.measure
        cname = comp.name

        def build(pre, post):
            b = Event(head, tuple(_event_arg(f(pre, post, None)) for f in fns))
            if b not in measure:
                raise EvalError(f"emitted event {b} is outside the alphabet of {cname}")
            return b
        return build

    def guards(self, decls, scope, slots):
        """Per-event definedness: the conjunction of every guard matching the event."""
        ok = [d for d in decls if self.check_pattern(d.pattern, scope)]
        table = {}
        deps = set()
        for a in scope.events:
            conds = []
            for d in ok:
                b = self.match(d.pattern, a, scope)
                if b is None:
                    continue
                ctx = _Ctx(bindings=b, event=a, slots=slots)
                try:
                    c = self.cexpr(d.cond, ctx, scope)
                    self.want(c, BOOL, d.cond)
                except _Fail:
                    continue
                deps |= ctx.pre
                if c.const is not True:
                    conds.append(c.fn)
            if len(conds) == 1:
                fn = conds[0]
                table[a] = (lambda s, _f=fn: _f(s, None, None))
            elif conds:
                table[a] = (lambda s, _fs=tuple(conds): all(f(s, None, None) for f in _fs))
        return table, frozenset(deps)

    def check_pattern(self, pat, scope):
        if pat.head not in scope.alphabet:
            self.diag(pat, f"unknown event {pat.head!r}", "resolve")
            return False
        doms = scope.alphabet[pat.head]
        if len(doms) != len(pat.args):
            self.diag(pat, f"({pat.head} ...) takes {len(doms)} arguments", "sort")
            return False
        binders = []
        for arg, d in zip(pat.args, doms):
            lit = self.pattern_literal(arg, scope, scope.domains[d])
            if lit is _NC:
                if arg.ident != "_":
                    binders.append(arg.ident)
            elif lit not in scope.domains[d]:
                self.diag(arg, f"{format_value(lit)} is not in domain {d!r}", "domain")
        if len(binders) != len(set(binders)):
            self.diag(pat, "a pattern binds the same name twice", "resolve")
        return True

    def pattern_literal(self, arg, scope, dom):
        if isinstance(arg, (ast.Num, ast.Lit)):
            v = arg.value
            return _event_arg(Fraction(v)) if not isinstance(v, str) else v
        if isinstance(arg, ast.Name):
            if arg.ident in scope.consts:
                v = scope.consts[arg.ident]
                return _event_arg(v) if isinstance(v, Fraction) and v.denominator == 1 else v
            if arg.ident in dom:
                return arg.ident
        return _NC

    def match(self, pat, a: Event, scope):
        """Bindings if pattern ``pat`` matches the concrete event ``a``, else None."""
        if pat.head != a.head or len(pat.args) != len(a.args):
            return None
        doms = scope.alphabet.get(a.head, ())
        b = {}
        for arg, val, d in zip(pat.args, a.args, doms):
            lit = self.pattern_literal(arg, scope, scope.domains[d])
            if lit is not _NC:
                if lit != val:
                    return None
            elif arg.ident != "_":
                b[arg.ident] = _norm(val)
        return b

    # -- properties ---------------------------------------------------

    def compile_property(self, e, scope, slots):
        if not _has_temporal(e):
            ctx = _Ctx(bindings={}, event=DYNAMIC, allow_post=True, slots=slots)
            c = self.cexpr(e, ctx, scope)
            self.want(c, BOOL, e)
            text = printer.expr(e)
            deps = frozenset(ctx.pre | ctx.post)
            if ctx.post or ctx.uses_event:
                return temporal.NextAtom(text, c.fn, deps)
            fn = c.fn
            return temporal.Atom(text, lambda s, _f=fn: _f(s, None, None), deps)
        rec = lambda x: self.compile_property(x, scope, slots)  # noqa: E731
        if isinstance(e, ast.Unary) and e.op == "not":
            return temporal.Not(rec(e.operand))
        if isinstance(e, ast.Binary) and e.op in ("and", "or", "implies"):
            cls = {"and": temporal.And, "or": temporal.Or, "implies": temporal.Implies}[e.op]
            return cls(rec(e.left), rec(e.right))
        if isinstance(e, ast.Temporal):
            if e.op == "within":
                n = self.const_value(e.bound, scope, "within bound")
                if not isinstance(n, Fraction) or n.denominator != 1 or n < 0:
                    self.fail(e.bound, "within needs a nonnegative integer", "sort")
                return temporal.Within(int(n), rec(e.operand))
            cls = {"next": temporal.Next, "possible_next": temporal.PossibleNext,
                   "always": temporal.Always, "globally": temporal.Globally,
                   "eventually": temporal.Eventually}[e.op]
            return cls(rec(e.operand))
        if isinstance(e, ast.Bounded):
            var = self.decl_flat(e.var, scope)
            if scope.sorts.get(var) != RAT:
                self.fail(e.var, f"bounded needs a rational state variable, not {var!r}", "sort")
            if e.limit is None:
                return temporal.Bounded(var)
            k = self.const_value(e.limit, scope, "bound")
            if not isinstance(k, Fraction):
                self.fail(e.limit, "bound must be a number", "sort")
            return temporal.BoundCompare(var, k)
        self.fail(e, "temporal formulas cannot be compared or used in arithmetic", "sort")

    # -- expressions --------------------------------------------------

    def want(self, c, sort, node):
        if c.sort != sort:
            self.fail(node, f"expected {sort}, found {c.sort}", "sort")

    def cexpr(self, e, ctx, scope) -> _C:
        t = type(e)
        if t is ast.Num:
            return _const(Fraction(e.value), RAT)
        if t is ast.Bool:
            return _const(e.value, BOOL)
        if t is ast.Lit:
            v = _norm(e.value)
            return _const(v, _sort_of(v))
        if t is ast.Name:
            return self.cname(e, ctx, scope)
        if t is ast.Call:
            return self.ccall(e, ctx, scope)
        if t is ast.Unary:
            x = self.cexpr(e.operand, ctx, scope)
            if e.op == "not":
                self.want(x, BOOL, e.operand)
                xf = x.fn
                return self._fold(_C(lambda pre, post, ev: not xf(pre, post, ev), BOOL), x)
            self.want(x, RAT, e.operand)
            xf = x.fn
            return self._fold(_C(lambda pre, post, ev: -xf(pre, post, ev), RAT), x)
        if t is ast.Binary:
            return self.cbinary(e, ctx, scope)
        if t in (ast.Temporal, ast.Bounded):
            self.fail(e, "temporal operator outside a property", "sort")
        self.fail(e, f"unexpected {t.__name__}", "syntax")

    @staticmethod
    def _fold(c, *parts):
        if all(p.const is not _NC for p in parts):
            c.const = c.fn(None, None, None)
        return c

    def cbinary(self, e, ctx, scope):
        op = e.op
        lc = self.cexpr(e.left, ctx, scope)
        rc = self.cexpr(e.right, ctx, scope)
        lf, rf = lc.fn, rc.fn
        if op in ("and", "or", "implies"):
            self.want(lc, BOOL, e.left)
            self.want(rc, BOOL, e.right)
            if op == "and":
                fn = lambda pre, post, ev: lf(pre, post, ev) and rf(pre, post, ev)  # noqa: E731
            elif op == "or":
                fn = lambda pre, post, ev: lf(pre, post, ev) or rf(pre, post, ev)  # noqa: E731
            else:
                fn = lambda pre, post, ev: (not lf(pre, post, ev)) or rf(pre, post, ev)  # noqa: E731
            return self._fold(_C(fn, BOOL), lc, rc)
        if op in ("=", "!="):
            if lc.sort != rc.sort:
                self.fail(e, f"cannot compare {lc.sort} with {rc.sort}", "sort")
            if lc.sort == COMPONENT:
                self.fail(e, "component states cannot be compared directly", "sort")
            if op == "=":
                fn = lambda pre, post, ev: lf(pre, post, ev) == rf(pre, post, ev)  # noqa: E731
            else:
                fn = lambda pre, post, ev: lf(pre, post, ev) != rf(pre, post, ev)  # noqa: E731
            return self._fold(_C(fn, BOOL), lc, rc)
        self.want(lc, RAT, e.left)
        self.want(rc, RAT, e.right)
        if op in ("<", "<=", ">", ">="):
            cmp = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge}[op]
            fn = lambda pre, post, ev: cmp(lf(pre, post, ev), rf(pre, post, ev))  # noqa: E731
            return self._fold(_C(fn, BOOL), lc, rc)
        if op == "+":
            fn = lambda pre, post, ev: lf(pre, post, ev) + rf(pre, post, ev)  # noqa: E731
        elif op == "-":
            fn = lambda pre, post, ev: lf(pre, post, ev) - rf(pre, post, ev)  # noqa: E731
        elif op == "*":
            fn = lambda pre, post, ev: lf(pre, post, ev) * rf(pre, post, ev)  # noqa: E731
        else:
            def fn(pre, post, ev):
                d = rf(pre, post, ev)
                if d == 0:
                    raise EvalError(f"division by zero in {printer.expr(e)}")
                return lf(pre, post, ev) / d
        try:
            return self._fold(_C(fn, RAT), lc, rc)
        except EvalError as exc:
            self.fail(e, str(exc), "arith")

    def cname(self, e, ctx, scope):
        ident = e.ident
        plain = not e.indices and not e.primed
        if plain and ident in ctx.bindings:
            v = ctx.bindings[ident]
            return _const(v, _sort_of(v))
        if plain and ident in scope.consts:
            v = scope.consts[ident]
            return _const(v, _sort_of(v))
        fam = scope.families.get(ident)
        if fam is not None:
            return self.cvar(e, fam, ctx, scope)
        if plain and ident in scope.symbols:
            return _const(ident, SYM)
        if ident == "a":
            self.fail(e, "the current event 'a' may only appear as m(a)", "resolve")
        if e.indices or e.primed:
            self.fail(e, f"unknown state variable {ident!r}", "resolve")
        self.fail(e, f"unknown name {ident!r}", "resolve")

    def cvar(self, e, fam, ctx, scope):
        if not ctx.allow_state:
            self.fail(e, f"{printer.expr(e)} reads the state, which is not available here", "resolve")
        if e.primed and not ctx.allow_post:
            self.fail(e, f"post-event value {printer.expr(e)} is not available here", "prime")
        arity = len(next(iter(fam)))
        if len(e.indices) != arity:
            self.fail(e, f"{e.ident!r} takes {arity} indices", "sort")
        idx = [self.cexpr(i, ctx, scope) for i in e.indices]
        refs = ctx.post if e.primed else ctx.pre
        sort = scope.sorts[next(iter(fam.values()))]
        slots = ctx.slots
        if all(c.const is not _NC for c in idx):
            key = tuple(c.const for c in idx)
            n = fam.get(key)
            if n is None:
                self.fail(e, f"index {flat_name(e.ident, key)} is out of range", "domain")
            refs.add(n)
            i = slots[n]
            if e.primed:
                return _C(lambda pre, post, ev: post[i], sort)
            return _C(lambda pre, post, ev: pre[i], sort)
        refs.update(fam.values())
        table = {k: slots[n] for k, n in fam.items()}
        fns = [c.fn for c in idx]
        ident = e.ident
        primed = e.primed

        def fn(pre, post, ev):
            key = tuple(f(pre, post, ev) for f in fns)
            try:
                i = table[key]
            except KeyError:
                raise EvalError(f"index {flat_name(ident, key)} is out of range") from None
            return post[i] if primed else pre[i]
        return _C(fn, sort)

    def ccall(self, e, ctx, scope):
        if e.func == "m":
            if len(e.args) != 1 or e.args[0] != ast.Name("a"):
                self.fail(e, "the measure is applied as m(a)", "resolve")
            if ctx.event is None:
                self.fail(e, "m(a) needs an event, and none is in scope here", "resolve")
            if ctx.event is DYNAMIC:
                ctx.uses_event = True
                table = scope.measure
                return _C(lambda pre, post, ev: table[ev], RAT)
            return _const(scope.measure[ctx.event], RAT)
        if len(e.args) != 1 or not isinstance(e.args[0], ast.Name):
            self.fail(e, f"{e.func}(...) must be applied to one projection variable", "resolve")
        target = e.args[0]
        fam = scope.families.get(target.ident)
        members = [scope.projections.get(n) for n in fam.values()] if fam else []
        if not members or any(m is None for m in members):
            self.fail(target, f"{target.ident!r} is not a projection variable", "resolve")
        kmap = {}
        sort = None
        for comp in members:
            if e.func not in comp.exports:
                self.fail(e, f"component {comp.name!r} does not export {e.func!r}", "resolve")
            kmap[comp.name] = comp.model.index[e.func]
            s = comp.model.vars[kmap[comp.name]].sort
            if sort is not None and s != sort:
                self.fail(e, f"{e.func!r} has different sorts across components", "sort")
            sort = s
        base = self.cvar(target, fam, ctx, scope).fn
        if len(kmap) == 1:
            (k,) = kmap.values()
            return _C(lambda pre, post, ev: base(pre, post, ev).values[k], sort)
        return _C(lambda pre, post, ev: (lambda cs: cs.values[kmap[cs.component]])(base(pre, post, ev)), sort)


def _has_temporal(e) -> bool:
    if isinstance(e, (ast.Temporal, ast.Bounded)):
        return True
    if isinstance(e, ast.Unary):
        return _has_temporal(e.operand)
    if isinstance(e, ast.Binary):
        return _has_temporal(e.left) or _has_temporal(e.right)
    return False


def _make_update(name, arms, rational):
    if len(arms) == 1 and arms[0][0] is None:
        body = arms[0][1]
        if rational:
            return lambda pre, post, ctx: Fraction(body(pre, post, None))
        return lambda pre, post, ctx: body(pre, post, None)

    def update(pre, post, ctx):
        for g, body in arms:
            if g is None or g(pre, post, None):
                v = body(pre, post, None)
                return Fraction(v) if rational else v
        raise EvalError(f"no clause of {name!r} applies")
    return update


def check_static(sm: ast.SourceModel, consts=None, name="model") -> Model:
    """Validate a parsed model and compile it; raises SpecError with diagnostics."""
    try:
        return Checker(consts, name).run(sm)
    except EvalError as exc:
        raise SpecError([Diagnostic(str(exc), 0, 0, "arith")]) from None


def load_model(source, consts=None, name=None) -> Model:
    """Parse and check a model given as a path or as source text."""
    if isinstance(source, Path) or (isinstance(source, str) and source.endswith(".svl")
                                    and "\n" not in source):
        path = Path(source)
        text = path.read_text(encoding="utf-8")
        name = name or path.stem
    else:
        text = source
    return check_static(parse(text), consts, name or "model")


def compile_formula(model: Model, text: str):
    """Compile a property formula against an already loaded model."""
    checker = model.scope
    e = parse_expr(text)
    checker.diags = []
    checker._seen = set()
    try:
        p = checker.compile_property(e, checker._scope, checker._slots)
    except _Fail:
        p = None
    if checker.diags or p is None:
        raise SpecError(checker.diags)
    return p
