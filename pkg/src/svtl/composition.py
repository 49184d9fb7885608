"""Components driven through projection variables.

A projection variable ``u[p]`` maps the system trace to the trace of one
component: it is frozen while its freeze guard holds and otherwise advances
the component by exactly one event chosen by its emit rules.  Only the
component's state tuple is kept (``f(g(sigma))`` needs nothing else); the raw
projected trace is carried along in debug mode so the two can be compared.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from . import kernel
from .errors import NoEmission, RendezvousViolation, UnknownExport, UndefinedTransition
from .kernel import Event, Model, StepContext, format_value

SEND = "send"
RECEIVE = "receive"


@dataclass(frozen=True)
class ComponentState:
    component: str
    values: tuple
    trace: tuple = field(default=(), compare=False, repr=False)

    def __str__(self):
        return "{" + " ".join(format_value(v) for v in self.values) + "}"


@dataclass(eq=False)
class ComponentDef:
    name: str
    model: Model
    exports: tuple

    def initial(self) -> ComponentState:
        return ComponentState(self.name, kernel.init_state(self.model))

    def export_index(self, v: str) -> int:
        if v not in self.exports:
            raise UnknownExport(f"component {self.name} does not export {v!r}")
        return self.model.index[v]

    def describe(self, cs: ComponentState) -> str:
        return "{" + self.model.format_state(cs.values) + "}"


@dataclass(eq=False)
class ProjectionDef:
    """Compiled ``project`` declaration.

    ``freeze[a]`` and the guards/builders in ``emit[a]`` are closures over
    ``(pre, post)`` system states, specialised per system event ``a``.
    """

    name: str
    owner: object
    component: ComponentDef
    freeze: Mapping[Event, Callable]
    emit: Mapping[Event, list]


def component_event(proj: ProjectionDef, sys_pre, sys_post, a: Event) -> Optional[Event]:
    """The component event emitted for ``a``, or None when frozen."""
    if proj.freeze[a](sys_pre, sys_post, None):
        return None
    for guard, build in proj.emit[a]:
        if guard is None or guard(sys_pre, sys_post, None):
            return build(sys_pre, sys_post)
    raise NoEmission(f"{proj.name} is not frozen on {a} but no emit rule applies")


def advance_component(comp: ComponentDef, cs: ComponentState, b: Event, debug=False) -> ComponentState:
    try:
        values = kernel.step_state(comp.model, cs.values, b)
    except UndefinedTransition as exc:
        raise UndefinedTransition(b, detail=f"in component {comp.name}: {exc}") from None
    return ComponentState(cs.component, values, cs.trace + (b,) if debug else ())


def project_step(proj: ProjectionDef, sys_pre, sys_post, a: Event, cs: ComponentState,
                 ctx: Optional[StepContext] = None) -> ComponentState:
    b = component_event(proj, sys_pre, sys_post, a)
    if b is None:
        return cs
    debug = ctx.debug if ctx is not None else False
    new = advance_component(proj.component, cs, b, debug)
    if ctx is not None:
        ctx.emissions.append((proj, b, cs))
    return new


def eval_component_var(proj: ProjectionDef, cs: ComponentState, v: str):
    return cs.values[proj.component.export_index(v)]


def replay(comp: ComponentDef, trace) -> ComponentState:
    """Fold the component over a raw projected trace (the debug-mode oracle)."""
    return ComponentState(comp.name, kernel.fold(comp.model, trace), tuple(trace))


def _exported(comp: ComponentDef, cs: ComponentState, v: str):
    if v in comp.exports:
        return cs.values[comp.model.index[v]]
    return None


def validate_rendezvous(model: Model, sys_pre, sys_post, a: Event, emissions):
    """Every send emitted in this step pairs with exactly one receive.

    A component event ``(send v q)`` appended to ``u[p]`` must coincide with
    ``(receive v p)`` appended to ``u[q]``, and the sender must be offering
    that value on that port (its OUT/PORT/VALUE exports, when present).
    """
    sends, recvs = [], []
    for proj, b, cs in emissions:
        if b.head not in (SEND, RECEIVE):
            continue
        if len(b.args) != 2:
            raise RendezvousViolation(f"{proj.name} emitted {b}; expected ({b.head} value process)")
        (sends if b.head == SEND else recvs).append((proj, b, cs))
    if not sends and not recvs:
        return
    where = f"on {a}"
    targets = Counter(b.args[1] for _, b, _ in sends)
    for q, n in targets.items():
        if n > 1:
            raise RendezvousViolation(f"{n} senders target process {format_value(q)} {where}")
    for proj, b, cs in sends:
        v, q = b.args
        p = proj.owner
        matches = [r for r in recvs if r[0].owner == q and r[1].args == (v, p)]
        if len(matches) != 1:
            raise RendezvousViolation(
                f"{proj.name} sends {format_value(v)} to {format_value(q)} {where} "
                f"without a matching receive")
        comp = proj.component
        out, port, value = (_exported(comp, cs, n) for n in ("OUT", "PORT", "VALUE"))
        if out is False or (port is not None and port != q) or (value is not None and value != v):
            raise RendezvousViolation(f"{proj.name} is not offering {format_value(v)} to "
                                      f"{format_value(q)} {where}")
    for proj, b, _ in recvs:
        v, p = b.args
        matches = [s for s in sends if s[0].owner == p and s[1].args == (v, proj.owner)]
        if len(matches) != 1:
            raise RendezvousViolation(
                f"{proj.name} receives {format_value(v)} from {format_value(p)} {where} "
                f"without a matching send")


def rendezvous_step(model: Model, sys_pre, a: Event):
    """Advance all projections jointly and validate the send/receive pairing."""
    post, emissions = kernel.step_with_emissions(model, sys_pre, a)
    validate_rendezvous(model, sys_pre, post, a, emissions)
    return post


def emissions_of(model: Model, sys_pre, a: Event) -> dict:
    """Map projection name to the component event it emits on ``a``."""
    _, emissions = kernel.step_with_emissions(model, sys_pre, a)
    return {proj.name: b for proj, b, _ in emissions}


def projected_traces(model: Model, z) -> dict:
    """Raw projected traces for every projection after system trace ``z``."""
    s = kernel.fold(model, z, debug=True)
    return {name: s[model.index[name]].trace for name in model.projections}
