"""Reachable transition graphs by breadth-first search over state tuples.

Nodes are numbered densely in BFS order, with successors visited in
lexicographic event order, so two explorations of one model agree exactly.
A node is *expanded* once all its defined events have targets in the graph;
unexpanded nodes form the frontier of a truncated exploration.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from . import kernel
from .errors import GraphTruncated, NoWitness
from .kernel import Model, format_value

DEFAULT_MAX_STATES = 100_000
DEFAULT_MAX_DEPTH = 10_000


class _Cyclic:
    def __repr__(self):
        return "CYCLIC"


CYCLIC = _Cyclic()


@dataclass(frozen=True)
class ExploreLimits:
    max_states: int = DEFAULT_MAX_STATES
    max_depth: int = DEFAULT_MAX_DEPTH

    def __post_init__(self):
        if self.max_states < 1 or self.max_depth < 1:
            raise ValueError("exploration limits must be at least 1")

    @classmethod
    def default(cls, max_states=None, max_depth=None):
        """Limits from arguments, falling back to ``SVTL_MAX_STATES`` and the defaults."""
        if max_states is None:
            env = os.environ.get("SVTL_MAX_STATES")
            max_states = int(env) if env else DEFAULT_MAX_STATES
        return cls(max_states, max_depth if max_depth is not None else DEFAULT_MAX_DEPTH)


@dataclass
class TransitionGraph:
    model: Model
    states: list = field(default_factory=list)
    edges: list = field(default_factory=list)  # node -> [(Event, node)]
    expanded: list = field(default_factory=list)
    depth: list = field(default_factory=list)
    parent: list = field(default_factory=list)  # node -> (node, Event) or None
    complete: bool = True
    keep: Optional[frozenset] = None  # variables that make up node identity
    root: int = 0

    def __len__(self):
        return len(self.states)

    @property
    def edge_count(self):
        return sum(len(es) for es in self.edges)

    @property
    def frontier(self):
        return [i for i, done in enumerate(self.expanded) if not done]

    @property
    def frontier_depth(self):
        """Depth of the shallowest unexpanded node (None when complete)."""
        depths = [self.depth[i] for i in self.frontier]
        return min(depths) if depths else None

    @property
    def dead_ends(self):
        return [i for i, es in enumerate(self.edges) if self.expanded[i] and not es]

    def is_dead_end(self, i):
        return self.expanded[i] and not self.edges[i]

    def successors(self, i):
        return [j for _, j in self.edges[i]]

    def path_to(self, i) -> tuple:
        """Events of the BFS-tree path from the root to ``i`` (a shortest path)."""
        out = []
        while self.parent[i] is not None:
            i, a = self.parent[i]
            out.append(a)
        return tuple(reversed(out))

    def value(self, i, name):
        return self.states[i][self.model.index[name]]


def explore(model: Model, limits: Optional[ExploreLimits] = None,
            keep: Optional[Iterable[str]] = None) -> TransitionGraph:
    """BFS from the initial state.

    ``keep`` restricts node identity to a set of variables closed under
    dependencies (see :meth:`Model.cone`); each node still stores a full
    representative state, so values outside ``keep`` are those of the
    first trace that reached the node.
    """
    limits = limits or ExploreLimits.default()
    if keep is not None:
        keep = frozenset(keep)
        idx = tuple(sorted(model.index[n] for n in keep))
        key_of = lambda s: tuple(s[i] for i in idx)  # noqa: E731
    else:
        key_of = lambda s: s  # noqa: E731
    g = TransitionGraph(model, keep=keep)
    s0 = kernel.init_state(model)
    ids = {key_of(s0): 0}
    g.states.append(s0)
    g.edges.append([])
    g.expanded.append(False)
    g.depth.append(0)
    g.parent.append(None)
    queue = deque([0])
    while queue:
        i = queue.popleft()
        s = g.states[i]
        events = kernel.defined_events(model, s)
        if not events:
            g.expanded[i] = True
            continue
        if g.depth[i] >= limits.max_depth:
            continue
        targets = []
        for a in events:
            t = kernel.step_state(model, s, a)
            targets.append((a, t, key_of(t)))
        fresh = {k for _, _, k in targets if k not in ids}
        if len(g.states) + len(fresh) > limits.max_states:
            continue
        out = []
        for a, t, k in targets:
            j = ids.get(k)
            if j is None:
                j = ids[k] = len(g.states)
                g.states.append(t)
                g.edges.append([])
                g.expanded.append(False)
                g.depth.append(g.depth[i] + 1)
                g.parent.append((i, a))
                queue.append(j)
            out.append((a, j))
        g.edges[i] = out
        g.expanded[i] = True
    g.complete = all(g.expanded)
    return g


# -- paths --------------------------------------------------------------------


def longest_avoiding_path(graph: TransitionGraph, s: int, pred: Callable[[int], bool]):
    """Longest path from ``s`` through nodes where ``pred`` fails.

    A node satisfying ``pred`` or a dead end ends the path.  Returns
    :data:`CYCLIC` if a cycle of failing nodes is reachable that way.
    """
    memo = {}
    on_stack = set()
    stack = [(s, iter(()), True)]
    # iterative DFS: (node, successor iterator, first visit?)
    while stack:
        i, it, first = stack.pop()
        if first:
            if i in memo:
                continue
            if pred(i):
                memo[i] = 0
                continue
            if not graph.expanded[i]:
                raise GraphTruncated(graph.depth[i])
            on_stack.add(i)
            stack.append((i, iter(graph.successors(i)), False))
            continue
        pending = None
        for j in it:
            if j in on_stack:
                return CYCLIC
            if j not in memo:
                pending = j
                break
        if pending is not None:
            stack.append((i, it, False))
            stack.append((pending, iter(()), True))
            continue
        on_stack.discard(i)
        succ = graph.successors(i)
        memo[i] = 1 + max(memo[j] for j in succ) if succ else 0
    return memo[s]


@dataclass(frozen=True)
class Witness:
    trace: tuple
    loop_start: Optional[int] = None  # index in trace where the repeated cycle begins

    @property
    def is_lasso(self):
        return self.loop_start is not None

    def comments(self):
        if self.loop_start is None:
            return []
        return [f"lasso: events {self.loop_start + 1}..{len(self.trace)} repeat forever"]


def _bfs(graph, start, allowed=None):
    """Shortest-path parents from ``start`` staying inside ``allowed``."""
    parent = {start: None}
    order = [start]
    q = deque([start])
    while q:
        i = q.popleft()
        for a, j in graph.edges[i]:
            if j not in parent and (allowed is None or j in allowed):
                parent[j] = (i, a)
                order.append(j)
                q.append(j)
    return parent, order


def _trace(parent, i):
    out = []
    while parent[i] is not None:
        i, a = parent[i]
        out.append(a)
    return tuple(reversed(out))


def strongly_connected(graph: TransitionGraph, nodes) -> list:
    """Tarjan's SCCs of the subgraph induced by ``nodes`` (iterative)."""
    nodes = set(nodes)
    index, low, comp = {}, {}, []
    stack, on = [], set()
    counter = 0
    for root in sorted(nodes):
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, k = work.pop()
            if k == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on.add(v)
            succ = [j for j in graph.successors(v) if j in nodes]
            recurse = False
            while k < len(succ):
                w = succ[k]
                k += 1
                if w not in index:
                    work.append((v, k))
                    work.append((w, 0))
                    recurse = True
                    break
                if w in on:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                c = []
                while True:
                    w = stack.pop()
                    on.discard(w)
                    c.append(w)
                    if w == v:
                        break
                comp.append(c)
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
    return comp


def find_witness(graph: TransitionGraph, kind: str, target=None, within=None,
                 start: Optional[int] = None) -> Witness:
    """Shortest replayable trace of the requested kind.

    * ``to_node``: a path to node ``target``.
    * ``to_deadend``: a path to the nearest dead end.
    * ``lasso``: a stem plus a cycle; both stay inside ``within`` when given.

    Paths start at ``start`` (default: the root) and stay inside ``within``.
    """
    start = graph.root if start is None else start
    allowed = None if within is None else set(within)
    if allowed is not None and start not in allowed:
        raise NoWitness(f"start node {start} is outside the permitted region")
    parent, order = _bfs(graph, start, allowed)
    if kind == "to_node":
        if target not in parent:
            raise NoWitness(f"node {target} is unreachable")
        return Witness(_trace(parent, target))
    if kind == "to_deadend":
        for i in order:
            if graph.is_dead_end(i):
                return Witness(_trace(parent, i))
        raise NoWitness("no dead end is reachable")
    if kind == "lasso":
        region = set(order)
        cyclic = set()
        for c in strongly_connected(graph, region):
            if len(c) > 1 or c[0] in graph.successors(c[0]):
                cyclic.update(c)
        dist = {i: len(_trace(parent, i)) for i in order if i in cyclic}
        best = None
        for i in order:
            if i not in cyclic:
                continue
            if best is not None and dist[i] >= len(best.trace):
                break
            cyc = _shortest_cycle(graph, i, cyclic)
            stem = _trace(parent, i)
            w = Witness(stem + cyc, len(stem))
            if best is None or len(w.trace) < len(best.trace):
                best = w
        if best is None:
            raise NoWitness("no cycle is reachable")
        return best
    raise ValueError(f"unknown witness kind {kind!r}")


def _shortest_cycle(graph, i, allowed):
    parent = {}
    q = deque()
    for a, j in graph.edges[i]:
        if j == i:
            return (a,)
        if j in allowed and j not in parent:
            parent[j] = (i, a)
            q.append(j)
    while q:
        v = q.popleft()
        for a, j in graph.edges[v]:
            if j == i:
                out = [a]
                while v != i:
                    v, b = parent[v]
                    out.append(b)
                return tuple(reversed(out))
            if j in allowed and j not in parent:
                parent[j] = (v, a)
                q.append(j)
    raise NoWitness(f"node {i} is not on a cycle")


# -- output ---------------------------------------------------------------------


def _dot_escape(text):
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(graph: TransitionGraph, labels: Optional[Iterable[str]] = None) -> str:
    """DOT digraph; the root is doubly circled and frontier nodes are dashed."""
    model = graph.model
    names = list(labels) if labels is not None else model.names
    lines = [f'digraph "{_dot_escape(model.name)}" {{', "  node [shape=box];"]
    for i, s in enumerate(graph.states):
        text = "\\n".join([str(i)] + [_dot_escape(f"{n}={format_value(s[model.index[n]])}")
                                        for n in names])
        attrs = [f'label="{text}"']
        if i == graph.root:
            attrs.append("peripheries=2")
        if not graph.expanded[i]:
            attrs.append("style=dashed")
        lines.append(f"  n{i} [{', '.join(attrs)}];")
    for i, es in enumerate(graph.edges):
        for a, j in es:
            lines.append(f'  n{i} -> n{j} [label="{_dot_escape(str(a))}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def dump(graph: TransitionGraph, labels: Optional[Iterable[str]] = None) -> str:
    """Plain text: one line per node, then one line per edge."""
    model = graph.model
    names = list(labels) if labels is not None else model.names
    lines = []
    for i, s in enumerate(graph.states):
        flag = "" if graph.expanded[i] else " [frontier]"
        lines.append(f"{i}: {model.format_state(s, names)}{flag}")
    for i, es in enumerate(graph.edges):
        for a, j in es:
            lines.append(f"{i} {a} {j}")
    return "\n".join(lines) + "\n"

