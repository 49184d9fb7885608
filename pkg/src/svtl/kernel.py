"""Events, traces and state variables defined by primitive recursion.

A state variable is a function of the finite event sequence, given by an
initial value (its value on the empty trace) and an update rule saying how
one more event changes it.  A :class:`Model` is an immutable bundle of such
definitions in update order; a state is the tuple of all variable values,
indexed like ``model.vars``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .errors import EvalError, TraceSyntaxError, UndefinedTransition

BOOL = "bool"
RAT = "rat"
SYM = "sym"
COMPONENT = "component"

State = tuple


def _arg_key(v):
    if isinstance(v, str):
        return (1, v)
    return (0, v)


@dataclass(frozen=True)
class Event:
    head: str
    args: tuple = ()

    def __str__(self):
        if not self.args:
            return f"({self.head})"
        return "(" + " ".join([self.head, *(format_value(a) for a in self.args)]) + ")"

    def sort_key(self):
        return (self.head, tuple(_arg_key(a) for a in self.args))


Trace = tuple  # tuple[Event, ...]; the empty tuple is the null trace


def append(z: Trace, a: Event) -> Trace:
    return tuple(z) + (a,)


def format_value(v) -> str:
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return str(v)


# -- trace files ------------------------------------------------------------

_TRACE_TOKEN = re.compile(r"\s*(?:(\()|(\))|(-?\d+)(?![\w-])|([A-Za-z_][\w-]*))")


def parse_event(text: str, line: int = 1) -> Event:
    """Read one s-expression event such as ``(send 2 7)``."""
    pos = 0
    tokens = []
    text = text.strip()
    while pos < len(text):
        m = _TRACE_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise TraceSyntaxError(f"unexpected character {text[pos]!r}", line)
        pos = m.end()
        tokens.append(m)
    if len(tokens) < 3 or not tokens[0].group(1) or not tokens[-1].group(2):
        raise TraceSyntaxError("expected an event of the form (head arg ...)", line)
    head = tokens[1].group(4)
    if head is None:
        raise TraceSyntaxError("event head must be a symbol", line)
    args = []
    for tok in tokens[2:-1]:
        if tok.group(3) is not None:
            args.append(int(tok.group(3)))
        elif tok.group(4) is not None:
            args.append(tok.group(4))
        else:
            raise TraceSyntaxError("nested lists are not events", line)
    return Event(head, tuple(args))


_TRACE_ITEM = re.compile(r"\s*(\([^()]*\))")


def read_trace(text: str) -> Trace:
    """Events in s-expression form, any number per line; ``;`` starts a comment."""
    events = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split(";", 1)[0].rstrip()
        pos = 0
        while line[pos:].strip():
            m = _TRACE_ITEM.match(line, pos)
            if m is None:
                parse_event(line[pos:], lineno)  # raises with a precise message
                raise TraceSyntaxError("expected an event of the form (head arg ...)", lineno)
            events.append(parse_event(m.group(1), lineno))
            pos = m.end()
    return tuple(events)


def format_trace(z: Iterable[Event], comments: Sequence[str] = ()) -> str:
    out = [f"; {c}" for c in comments]
    out.extend(str(a) for a in z)
    return "\n".join(out) + "\n"


# -- model ------------------------------------------------------------------


@dataclass
class StepContext:
    """Scratch space for one transition: projection emissions, debug flag."""

    debug: bool = False
    emissions: list = field(default_factory=list)


Update = Callable[[tuple, list, StepContext], object]


@dataclass(eq=False)
class StateVarDef:
    """One state variable.

    ``update`` maps every event of the alphabet to the compiled clause list
    for that event, so pattern matching on the event happens at load time.
    ``pre_deps``/``post_deps`` name the variables read before and after
    the event; post-event reads always point earlier in update order.
    """

    name: str
    sort: str
    init: object
    update: Mapping[Event, Update]
    pre_deps: frozenset = frozenset()
    post_deps: frozenset = frozenset()
    projection: object = None  # composition.ProjectionDef for u_p-style variables


class Model:
    """An immutable, validated model produced by ``speclang.check_static``."""

    def __init__(self, *, name, domains, alphabet, measure, vars, guards,
                 guard_deps=frozenset(), properties=None, components=None,
                 consts=None, scope=None, validate_step=None, source=None):
        self.name = name
        self.domains = dict(domains)
        self.alphabet = dict(alphabet)
        self.events = tuple(sorted(measure, key=Event.sort_key))
        self.measure = dict(measure)
        self.vars = tuple(vars)
        self.index = {v.name: i for i, v in enumerate(self.vars)}
        self.guards = dict(guards)
        self.guard_deps = frozenset(guard_deps)
        self.properties = dict(properties or {})
        self.components = dict(components or {})
        self.consts = dict(consts or {})
        self.scope = scope
        self.validate_step = validate_step
        self.source = source

    def __repr__(self):
        return f"<Model {self.name}: {len(self.vars)} vars, {len(self.events)} events>"

    @property
    def names(self):
        return [v.name for v in self.vars]

    @property
    def projections(self):
        return {v.name: v.projection for v in self.vars if v.projection is not None}

    def var(self, name):
        try:
            return self.vars[self.index[name]]
        except KeyError:
            raise KeyError(f"no state variable named {name!r}") from None

    def as_dict(self, s: State) -> dict:
        return {v.name: s[i] for i, v in enumerate(self.vars)}

    def format_state(self, s: State, names: Optional[Iterable[str]] = None) -> str:
        if names is None:
            names = self.names
        return " ".join(f"{n}={format_value(s[self.index[n]])}" for n in names)

    def check_event(self, a: Event):
        if a not in self.measure:
            raise UndefinedTransition(a, detail="not in the alphabet")

    def cone(self, names: Iterable[str]) -> frozenset:
        """Variables that can influence ``names`` (plus everything guards read)."""
        todo = list(set(names) | self.guard_deps)
        seen = set()
        while todo:
            n = todo.pop()
            if n in seen or n not in self.index:
                continue
            seen.add(n)
            v = self.var(n)
            todo.extend(v.pre_deps | v.post_deps)
        return frozenset(seen)


def init_state(model: Model) -> State:
    return tuple(v.init for v in model.vars)


def is_defined(model: Model, s: State, a: Event) -> bool:
    if a not in model.measure:
        return False
    g = model.guards.get(a)
    return g is None or bool(g(s))


def defined_events(model: Model, s: State) -> list:
    """Events whose definedness guard holds at ``s``, in lexicographic order."""
    guards = model.guards
    out = []
    for a in model.events:
        g = guards.get(a)
        if g is None or g(s):
            out.append(a)
    return out


def step_with_emissions(model: Model, s: State, a: Event, debug=False, check=True):
    """Advance ``s`` by ``a``; also return the component events emitted."""
    if check and not is_defined(model, s, a):
        model.check_event(a)
        raise UndefinedTransition(a)
    post = [None] * len(model.vars)
    ctx = StepContext(debug=debug)
    for i, v in enumerate(model.vars):
        post[i] = v.update[a](s, post, ctx)
    post = tuple(post)
    if model.validate_step is not None and ctx.emissions:
        model.validate_step(model, s, post, a, ctx.emissions)
    return post, ctx.emissions


def step_state(model: Model, s: State, a: Event, debug=False) -> State:
    return step_with_emissions(model, s, a, debug=debug)[0]


def fold(model: Model, z: Iterable[Event], debug=False) -> State:
    s = init_state(model)
    for pos, a in enumerate(z, 1):
        try:
            s = step_state(model, s, a, debug=debug)
        except UndefinedTransition as exc:
            raise UndefinedTransition(a, pos, _detail(exc)) from exc
    return s


def _detail(exc):
    return "not in the alphabet" if "alphabet" in str(exc) else ""


def eval_var(model: Model, v: str, z: Iterable[Event], debug=False):
    """Value of variable ``v`` in the state determined by trace ``z``."""
    i = model.index[v]
    return fold(model, z, debug=debug)[i]


@dataclass
class RunResult:
    states: list
    events: tuple
    error: Optional[UndefinedTransition] = None

    @property
    def ok(self):
        return self.error is None


def run_trace(model: Model, z: Iterable[Event], debug=False) -> RunResult:
    """States after every prefix of ``z``, stopping at the first undefined event."""
    z = tuple(z)
    s = init_state(model)
    states = [s]
    for pos, a in enumerate(z, 1):
        try:
            s = step_state(model, s, a, debug=debug)
        except UndefinedTransition as exc:
            return RunResult(states, z, UndefinedTransition(a, pos, _detail(exc)))
        states.append(s)
    return RunResult(states, z)


def to_fraction(x) -> Fraction:
    if isinstance(x, bool):
        raise EvalError(f"expected a number, got {format_value(x)}")
    return x if isinstance(x, Fraction) else Fraction(x)
