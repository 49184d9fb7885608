"""Temporal operators decided over an explored transition graph.

Every formula is labelled on every node with True, False or None.  None
means the answer depends on nodes the exploration never expanded, which
is how a truncated graph yields an honest Unknown instead of a guess.

Operators:

* ``possible_next P``: some event is defined here.
* ``next P``: possible_next, and P after every defined event.
* ``within n P``: P, or n > 0 and next (within n-1 P).
* ``eventually P``: within n P for some n; the least such n is its bound.
* ``always P``: the greatest solution of P and next always P, so reaching
  a dead end breaks it.
* ``globally P``: P at every state reachable by defined events.
* ``bounded v`` / ``bounded v < k``: some constant (or k) exceeds v on
  every reachable state.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .errors import GraphTruncated, NoWitness
from .explorer import ExploreLimits, TransitionGraph, Witness, explore, find_witness


@dataclass(frozen=True)
class Atom:
    """Boolean expression over the current state."""

    text: str
    fn: Callable = field(compare=False, repr=False, default=None)
    deps: frozenset = field(compare=False, repr=False, default=frozenset())

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class NextAtom:
    """Expression over current and post-event values, for every defined successor."""

    text: str
    fn: Callable = field(compare=False, repr=False, default=None)
    deps: frozenset = field(compare=False, repr=False, default=frozenset())

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class Not:
    p: object

    def __str__(self):
        return f"not {_wrap(self.p)}"


@dataclass(frozen=True)
class And:
    left: object
    right: object

    def __str__(self):
        return f"{_wrap(self.left)} and {_wrap(self.right)}"


@dataclass(frozen=True)
class Or:
    left: object
    right: object

    def __str__(self):
        return f"{_wrap(self.left)} or {_wrap(self.right)}"


@dataclass(frozen=True)
class Implies:
    left: object
    right: object

    def __str__(self):
        return f"{_wrap(self.left)} implies {_wrap(self.right)}"


@dataclass(frozen=True)
class Next:
    p: object

    def __str__(self):
        return f"next {_wrap(self.p)}"


@dataclass(frozen=True)
class PossibleNext:
    p: object

    def __str__(self):
        return f"possible_next {_wrap(self.p)}"


@dataclass(frozen=True)
class Always:
    p: object

    def __str__(self):
        return f"always {_wrap(self.p)}"


@dataclass(frozen=True)
class Globally:
    p: object

    def __str__(self):
        return f"globally {_wrap(self.p)}"


@dataclass(frozen=True)
class Within:
    n: int
    p: object

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("within needs a nonnegative step count")

    def __str__(self):
        return f"within {self.n} {_wrap(self.p)}"


@dataclass(frozen=True)
class Eventually:
    p: object

    def __str__(self):
        return f"eventually {_wrap(self.p)}"


@dataclass(frozen=True)
class Bounded:
    """Some constant bounds ``var`` on every reachable state."""

    var: str

    def __str__(self):
        return f"bounded {self.var}"


@dataclass(frozen=True)
class BoundCompare:
    """``var < limit`` on every reachable state."""

    var: str
    limit: Fraction

    def __str__(self):
        return f"bounded {self.var} < {self.limit}"


_BINARY_WORDS = (" and ", " or ", " implies ")


def _wrap(p) -> str:
    text = str(p)
    if isinstance(p, (And, Or, Implies)) or any(w in text for w in _BINARY_WORDS):
        return f"({text})"
    return text


def property_deps(p) -> frozenset:
    if isinstance(p, (Atom, NextAtom)):
        return p.deps
    if isinstance(p, (Bounded, BoundCompare)):
        return frozenset([p.var])
    if isinstance(p, (And, Or, Implies)):
        return property_deps(p.left) | property_deps(p.right)
    return property_deps(p.p)


def _children(p):
    if isinstance(p, (And, Or, Implies)):
        return (p.left, p.right)
    if isinstance(p, (Not, Next, PossibleNext, Always, Globally, Within, Eventually)):
        return (p.p,)
    return ()


def mentions_bound(p) -> bool:
    return isinstance(p, (Bounded, BoundCompare)) or any(mentions_bound(c) for c in _children(p))


# -- three-valued logic -------------------------------------------------------


def _not(x):
    return None if x is None else not x


def _and(x, y):
    if x is False or y is False:
        return False
    if x is None or y is None:
        return None
    return True


def _or(x, y):
    if x is True or y is True:
        return True
    if x is None or y is None:
        return None
    return False


def _all(values):
    out = True
    for v in values:
        if v is False:
            return False
        if v is None:
            out = None
    return out


class Labeling:
    """Per-node truth values of formulas over one graph, cached per subformula."""

    def __init__(self, graph: TransitionGraph):
        self.g = graph
        self.n = len(graph.states)
        self._labels = {}
        self._ranks = {}  # Eventually node -> its per-node bound (or None)
        self._within = {}  # (P, n) -> labels
        self._preds = None

    # -- graph helpers

    def preds(self):
        if self._preds is None:
            self._preds = [[] for _ in range(self.n)]
            for i, es in enumerate(self.g.edges):
                for _, j in es:
                    self._preds[j].append(i)
        return self._preds

    def reachable(self, i):
        seen = {i}
        q = deque([i])
        while q:
            v = q.popleft()
            for j in self.g.successors(v):
                if j not in seen:
                    seen.add(j)
                    q.append(j)
        return seen

    def _gfp(self, candidate, ok):
        """Largest subset S of ``candidate`` with ``ok(i, S)`` for every member."""
        inside = list(candidate)
        changed = True
        while changed:
            changed = False
            for i in range(self.n):
                if inside[i] and not ok(i, inside):
                    inside[i] = False
                    changed = True
        return inside

    def _lfp(self, seed, spreads):
        """Close ``seed`` backwards: a predecessor joins if ``spreads(pred)``."""
        inside = list(seed)
        q = deque(i for i in range(self.n) if inside[i])
        preds = self.preds()
        while q:
            j = q.popleft()
            for i in preds[j]:
                if not inside[i] and spreads(i):
                    inside[i] = True
                    q.append(i)
        return inside

    # -- labelling

    def label(self, p) -> list:
        out = self._labels.get(p)
        if out is None:
            out = self._labels[p] = self._compute(p)
        return out

    def _compute(self, p):
        g = self.g
        if isinstance(p, Atom):
            return [bool(p.fn(s)) for s in g.states]
        if isinstance(p, NextAtom):
            out = []
            for i, s in enumerate(g.states):
                if not g.expanded[i]:
                    out.append(None)
                else:
                    out.append(all(p.fn(s, g.states[j], a) for a, j in g.edges[i]))
            return out
        if isinstance(p, Not):
            return [_not(x) for x in self.label(p.p)]
        if isinstance(p, And):
            return [_and(x, y) for x, y in zip(self.label(p.left), self.label(p.right))]
        if isinstance(p, Or):
            return [_or(x, y) for x, y in zip(self.label(p.left), self.label(p.right))]
        if isinstance(p, Implies):
            return [_or(_not(x), y) for x, y in zip(self.label(p.left), self.label(p.right))]
        if isinstance(p, PossibleNext):
            return [None if not g.expanded[i] else bool(g.edges[i]) for i in range(self.n)]
        if isinstance(p, Next):
            return self._next(self.label(p.p))
        if isinstance(p, Within):
            return self.within(p.p, p.n)
        if isinstance(p, Eventually):
            return self._eventually(p)
        if isinstance(p, Always):
            return self._always(self.label(p.p))
        if isinstance(p, Globally):
            return self._globally(self.label(p.p))
        if isinstance(p, BoundCompare):
            return self._globally([self._value(i, p.var) < p.limit for i in range(self.n)])
        if isinstance(p, Bounded):
            return self._bounded()
        raise TypeError(f"not a property: {p!r}")

    def _value(self, i, var):
        return self.g.states[i][self.g.model.index[var]]

    def _next(self, inner):
        g = self.g
        out = []
        for i in range(self.n):
            if not g.expanded[i]:
                out.append(None)
            elif not g.edges[i]:
                out.append(False)
            else:
                out.append(_all(inner[j] for _, j in g.edges[i]))
        return out

    def within(self, p, n):
        key = (p, n)
        out = self._within.get(key)
        if out is None:
            base = self.label(p)
            if n == 0:
                out = list(base)
            else:
                nxt = self._next(self.within(p, n - 1))
                out = [_or(x, y) for x, y in zip(base, nxt)]
            self._within[key] = out
        return out

    def _eventually(self, p):
        g = self.g
        lab = self.label(p.p)
        rank = [None] * self.n
        # least fixpoint with ranks: a node holds once every outgoing edge does
        waiting = [len(g.edges[i]) for i in range(self.n)]
        preds = self.preds()
        q = deque()
        for i in range(self.n):
            if lab[i] is True:
                rank[i] = 0
                q.append(i)
        while q:
            j = q.popleft()
            for i in preds[j]:
                if rank[i] is not None:
                    continue
                waiting[i] -= 1
                if waiting[i] == 0 and g.expanded[i]:
                    rank[i] = 1 + max(rank[k] for k in g.successors(i))
                    q.append(i)
        # greatest fixpoint: not P forever, or not P down to a dead end
        false_set = self._gfp(
            [lab[i] is False and g.expanded[i] for i in range(self.n)],
            lambda i, s: not g.edges[i] or any(s[j] for j in g.successors(i)))
        self._ranks[p] = rank
        return [True if rank[i] is not None else (False if false_set[i] else None)
                for i in range(self.n)]

    def _always(self, lab):
        g = self.g
        true_set = self._gfp(
            [lab[i] is True and g.expanded[i] and bool(g.edges[i]) for i in range(self.n)],
            lambda i, s: all(s[j] for j in g.successors(i)))
        false_set = self._lfp([lab[i] is False or g.is_dead_end(i) for i in range(self.n)],
                              lambda i: True)
        return [True if true_set[i] else (False if false_set[i] else None) for i in range(self.n)]

    def _globally(self, lab):
        g = self.g
        true_set = self._gfp([lab[i] is True and g.expanded[i] for i in range(self.n)],
                             lambda i, s: all(s[j] for j in g.successors(i)))
        false_set = self._lfp([lab[i] is False for i in range(self.n)], lambda i: True)
        return [True if true_set[i] else (False if false_set[i] else None) for i in range(self.n)]

    def _bounded(self):
        touches = self._lfp([not e for e in self.g.expanded], lambda i: True)
        return [None if t else True for t in touches]

    # -- bounds

    def bound(self, p, i) -> Optional[int]:
        """Steps needed for the eventualities of ``p`` at node ``i`` (None if none apply)."""
        if self.label(p)[i] is not True:
            return None
        if isinstance(p, Eventually):
            return self._ranks[p][i]
        if isinstance(p, Implies):
            if self.label(p.left)[i] is True:
                return self.bound(p.right, i)
            return None
        if isinstance(p, And):
            return _max(self.bound(p.left, i), self.bound(p.right, i))
        if isinstance(p, Or):
            parts = [self.bound(c, i) for c in (p.left, p.right) if self.label(c)[i] is True]
            parts = [b for b in parts if b is not None]
            return min(parts) if len(parts) == 2 else None
        if isinstance(p, (Globally, Always)):
            out = None
            for j in sorted(self.reachable(i)):
                out = _max(out, self.bound(p.p, j))
            return out
        if isinstance(p, Next):
            out = None
            for j in self.g.successors(i):
                out = _max(out, self.bound(p.p, j))
            return out
        return None

    # -- witnesses

    def why_false(self, p, i) -> Witness:
        """A replayable trace from node ``i`` exhibiting that ``p`` fails there."""
        g = self.g
        if self.label(p)[i] is not False:
            raise NoWitness(f"{p} is not false at node {i}")
        if isinstance(p, (Atom, Not, PossibleNext)):
            return Witness(())
        if isinstance(p, NextAtom):
            s = g.states[i]
            for a, j in g.edges[i]:
                if not p.fn(s, g.states[j], a):
                    return Witness((a,))
        if isinstance(p, And):
            part = p.left if self.label(p.left)[i] is False else p.right
            return self.why_false(part, i)
        if isinstance(p, Or):
            a, b = self.why_false(p.left, i), self.why_false(p.right, i)
            return b if len(b.trace) >= len(a.trace) else a
        if isinstance(p, Implies):
            return self.why_false(p.right, i)
        if isinstance(p, Next):
            return self._step_into(i, self.label(p.p), lambda j: self.why_false(p.p, j))
        if isinstance(p, Within):
            return self._why_within(p.p, p.n, i)
        if isinstance(p, Eventually):
            return self._why_eventually(p, i)
        if isinstance(p, Always):
            lab = self.label(p.p)
            return self._to_bad(i, lambda j: lab[j] is False or g.is_dead_end(j),
                                lambda j: self.why_false(p.p, j) if lab[j] is False else Witness(()))
        if isinstance(p, Globally):
            lab = self.label(p.p)
            return self._to_bad(i, lambda j: lab[j] is False, lambda j: self.why_false(p.p, j))
        if isinstance(p, BoundCompare):
            return self._to_bad(i, lambda j: not self._value(j, p.var) < p.limit,
                                lambda j: Witness(()))
        raise NoWitness(f"no witness construction for {p}")

    def _step_into(self, i, inner, then):
        for a, j in self.g.edges[i]:
            if inner[j] is False:
                return _concat((a,), then(j))
        return Witness(())  # dead end

    def _why_within(self, p, n, i):
        if n == 0:
            return self.why_false(p, i)
        return self._step_into(i, self.within(p, n - 1), lambda j: self._why_within(p, n - 1, j))

    def _why_eventually(self, p, i):
        lab = self.label(p)
        region = [j for j in range(self.n) if lab[j] is False]
        options = []
        for kind in ("lasso", "to_deadend"):
            try:
                options.append(find_witness(self.g, kind, within=region, start=i))
            except NoWitness:
                pass
        if not options:
            raise NoWitness(f"{p} is false at node {i} but no witness was found")
        return min(options, key=lambda w: (len(w.trace), w.loop_start is None))

    def _to_bad(self, i, bad, then):
        parent = {i: None}
        q = deque([i])
        while q:
            v = q.popleft()
            if bad(v):
                path = []
                u = v
                while parent[u] is not None:
                    u, a = parent[u]
                    path.append(a)
                return _concat(tuple(reversed(path)), then(v))
            for a, j in self.g.edges[v]:
                if j not in parent:
                    parent[j] = (v, a)
                    q.append(j)
        raise NoWitness(f"no violating state is reachable from node {i}")


def _max(x, y):
    if x is None:
        return y
    if y is None:
        return x
    return max(x, y)


def _concat(prefix, w: Witness) -> Witness:
    loop = None if w.loop_start is None else len(prefix) + w.loop_start
    return Witness(tuple(prefix) + w.trace, loop)


# -- verdicts -------------------------------------------------------------------

HOLDS = "HOLDS"
FAILS = "FAILS"
UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class Verdict:
    outcome: str
    witness: Optional[tuple] = None
    loop_start: Optional[int] = None
    bound: Optional[int] = None
    frontier_depth: Optional[int] = None
    sup: Optional[Fraction] = None

    @property
    def holds(self):
        return self.outcome == HOLDS

    @property
    def fails(self):
        return self.outcome == FAILS

    @property
    def unknown(self):
        return self.outcome == UNKNOWN


def decide(graph: TransitionGraph, p, s: Optional[int] = None, labeling=None) -> Verdict:
    """Verdict for ``p`` at node ``s`` (default: the root)."""
    s = graph.root if s is None else s
    lab = labeling or Labeling(graph)
    value = lab.label(p)[s]
    sup = None
    if isinstance(p, (Bounded, BoundCompare)) and graph.complete:
        sup = sup_value(graph, p.var)[0]
    if value is True:
        return Verdict(HOLDS, bound=lab.bound(p, s), sup=sup)
    if value is False:
        w = lab.why_false(p, s)
        return Verdict(FAILS, w.trace, w.loop_start, sup=sup)
    return Verdict(UNKNOWN, frontier_depth=graph.frontier_depth)


def check_possible_next(graph: TransitionGraph, s: int) -> bool:
    if not graph.expanded[s]:
        raise GraphTruncated(graph.depth[s])
    return bool(graph.edges[s])


def check_next(graph, s, p) -> Verdict:
    return decide(graph, Next(p), s)


def check_within(graph, s, n, p) -> Verdict:
    return decide(graph, Within(n, p), s)


def check_eventually(graph, s, p) -> Verdict:
    return decide(graph, Eventually(p), s)


def check_always(graph, s, p) -> Verdict:
    return decide(graph, Always(p), s)


def check_globally(graph, s, p) -> Verdict:
    return decide(graph, Globally(p), s)


def sup_value(graph: TransitionGraph, var: str, partial=False):
    """``(max of var, node attaining it)`` over the explored nodes.

    Raises :class:`GraphTruncated` for an incomplete graph unless
    ``partial`` is set, since the true supremum may lie beyond the frontier.
    """
    if not graph.complete and not partial:
        raise GraphTruncated(graph.frontier_depth)
    k = graph.model.index[var]
    best, where = None, None
    for i, s in enumerate(graph.states):
        if best is None or s[k] > best:
            best, where = s[k], i
    return best, where


def resolve(model, prop):
    """A property given by name, source text, or as an AST."""
    if not isinstance(prop, str):
        return prop
    if prop in model.properties:
        return model.properties[prop]
    from .speclang import compile_formula

    return compile_formula(model, prop)


def check_property(model, prop, mode="exact", limits: Optional[ExploreLimits] = None,
                   graph: Optional[TransitionGraph] = None) -> Verdict:
    """Explore (restricted to the property's cone of influence) and decide.

    ``mode`` is ``"exact"`` or an integer depth bound ``d >= 1``.
    """
    p = resolve(model, prop)
    if graph is None:
        graph = explore_for(model, p, mode, limits)
    return decide(graph, p)


def explore_for(model, p, mode="exact", limits=None) -> TransitionGraph:
    limits = limits or ExploreLimits.default()
    if mode != "exact":
        if not isinstance(mode, int) or mode < 1:
            raise ValueError("bounded mode needs a depth d >= 1")
        limits = ExploreLimits(limits.max_states, mode)
    return explore(model, limits, keep=model.cone(property_deps(p)))
