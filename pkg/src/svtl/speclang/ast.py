"""Source-level AST for ``.svl`` model files.

Every node carries a ``span``; spans are excluded from equality so that
``parse(pretty_print(tree)) == tree`` compares structure only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_line: int = 0
    end_col: int = 0


def _span():
    return field(default=None, compare=False, repr=False)


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Bool:
    value: bool
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Lit:
    """A constant substituted by the ``forall`` expander; never parsed."""

    value: object
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Name:
    ident: str
    indices: tuple = ()
    primed: bool = False
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Unary:
    op: str  # "not" or "-"
    operand: "Expr"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Temporal:
    op: str  # next, possible_next, always, globally, eventually, within
    operand: "Expr"
    bound: Optional["Expr"] = None  # the n of ``within n``
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Bounded:
    var: Name
    limit: Optional["Expr"] = None
    span: Optional[Span] = _span()


Expr = Union[Num, Bool, Lit, Name, Call, Unary, Binary, Temporal, Bounded]


# -- declarations ------------------------------------------------------------


@dataclass(frozen=True)
class Pattern:
    head: str
    args: tuple  # Name (binder, const or symbol), Num, Lit, or Name("_")
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class EventExpr:
    head: str
    args: tuple
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Clause:
    """``on <pattern> when <guard> -> <body>``; both pattern and guard optional.

    ``otherwise`` clauses have ``otherwise=True`` and no pattern or guard.
    """

    body: object  # Expr, or EventExpr inside emit blocks
    pattern: Optional[Pattern] = None
    guard: Optional[Expr] = None
    otherwise: bool = False
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class ConstDecl:
    name: str
    value: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class DomainRange:
    name: str
    lo: Expr
    hi: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class DomainSet:
    name: str
    elements: tuple  # Num or Name (symbol)
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class EventSig:
    head: str
    domains: tuple
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class AlphabetDecl:
    sigs: tuple
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class MeasureDecl:
    clauses: tuple
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class VarDecl:
    name: Name
    sort: str
    init: Expr
    clauses: tuple
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class GuardDecl:
    pattern: Pattern
    cond: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class ExportDecl:
    names: tuple
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class ComponentDecl:
    name: Name
    body: tuple
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class ProjectDecl:
    name: Name
    component: Name
    freeze: Expr
    emits: tuple
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class PropertyDecl:
    name: Name
    formula: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Forall:
    var: str
    domain: str
    body: tuple
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class SourceModel:
    forms: tuple
    span: Optional[Span] = _span()


Form = Union[ConstDecl, DomainRange, DomainSet, AlphabetDecl, MeasureDecl, VarDecl,
             GuardDecl, ExportDecl, ComponentDecl, ProjectDecl, PropertyDecl, Forall]
