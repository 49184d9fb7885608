import random

import pytest

import oracles
from svtl import explorer, fixture_path, kernel, load_model, temporal
from svtl.errors import GraphTruncated
from svtl.explorer import ExploreLimits
from svtl.kernel import Event
from svtl.speclang import compile_formula
from svtl.temporal import Labeling

# x: 0 -> 1 -> 2 (dead end); (loop) keeps x=0 forever when allowed
CHAIN = """
alphabet (step) (loop)
var x : rat init 0 { on (step) -> x + 1 | otherwise -> x }
var spin : bool init false { otherwise -> spin }
guard (step) when x < 2
guard (loop) when spin
"""

FORK = """
alphabet (left) (right)
var x : rat init 0 { on (left) -> 1 | on (right) -> 2 | otherwise -> x }
guard (left) when x = 0
guard (right) when x = 0
"""


def graph(src, **consts):
    m = load_model(src, consts or None)
    return m, explorer.explore(m)


def f(m, text):
    return compile_formula(m, text)


def test_possible_next():
    m, g = graph(CHAIN)
    assert temporal.check_possible_next(g, 0)
    assert not temporal.check_possible_next(g, 2)
    _, rr = graph(fixture_path("scheduler_rr"))
    assert temporal.check_possible_next(rr, rr.root)
    short = explorer.explore(m, ExploreLimits(max_depth=1))
    with pytest.raises(GraphTruncated):
        temporal.check_possible_next(short, 1)


def test_next():
    m, g = graph(CHAIN)
    assert temporal.check_next(g, 2, f(m, "true")).fails  # dead end
    m, g = graph(FORK)
    assert temporal.check_next(g, 0, f(m, "x > 0")).holds
    v = temporal.check_next(g, 0, f(m, "x = 1"))
    assert v.fails and v.witness == (Event("right"),)


def test_within():
    m, g = graph(CHAIN)
    assert temporal.check_within(g, 2, 0, f(m, "x = 2")).holds
    assert temporal.check_within(g, 0, 2, f(m, "x = 2")).holds
    v = temporal.check_within(g, 0, 1, f(m, "x = 2"))
    assert v.fails and v.witness == (Event("step"),)
    for n in range(5):
        assert temporal.check_within(g, 2, n, f(m, "x = 5")).fails


def test_eventually():
    m, g = graph(CHAIN)
    v = temporal.check_eventually(g, 0, f(m, "x = 0"))
    assert v.holds and v.bound == 0
    v = temporal.check_eventually(g, 0, f(m, "x = 2"))
    assert v.holds and v.bound == 2
    v = temporal.check_eventually(g, 0, f(m, "x = 5"))
    assert v.fails and v.loop_start is None and len(v.witness) == 2

    m, g = graph(CHAIN.replace("init false", "init true"))
    v = temporal.check_eventually(g, 0, f(m, "x = 2"))
    assert v.fails and v.witness == (Event("loop"),) and v.loop_start == 0
    # brute force: the spin loop keeps x=0 at every depth
    assert not oracles.pure_within(m, lambda s: s[0] == 2, 6, kernel.init_state(m))


def test_always():
    m, g = graph("alphabet (a)\nvar v : bool init true { otherwise -> v }\n")
    assert temporal.check_always(g, 0, f(m, "v")).holds
    m, g = graph("alphabet (a)\nvar v : bool init true { otherwise -> v }\nguard (a) when false\n")
    v = temporal.check_always(g, 0, f(m, "v"))
    assert v.fails and v.witness == ()
    m, g = graph(CHAIN.replace("init false", "init true"))
    v = temporal.check_always(g, 0, f(m, "x < 1"))
    assert v.fails and v.witness == (Event("step"),)


def test_globally():
    m, g = graph("alphabet (a)\nvar v : bool init true { otherwise -> v }\nguard (a) when false\n")
    assert temporal.check_globally(g, 0, f(m, "v")).holds
    m, g = graph(CHAIN)
    v = temporal.check_globally(g, 0, f(m, "x < 2"))
    assert v.fails and len(v.witness) == 2
    m, g = graph(fixture_path("scheduler_rr"))
    assert temporal.check_globally(g, 0, f(m, "R[1] and R[2]")).holds


def test_sup_value():
    m, g = graph(fixture_path("scheduler_rr"), N=3)
    assert temporal.sup_value(g, "L[1]")[0] == 2
    m, g = graph("alphabet (a)\nvar z : rat init 0 { otherwise -> 0 }\n")
    assert temporal.sup_value(g, "z") == (0, 0)
    free = load_model(fixture_path("scheduler_free"))
    g = explorer.explore(free, ExploreLimits(max_depth=8))
    with pytest.raises(GraphTruncated):
        temporal.sup_value(g, "L[1]")
    seen = [temporal.sup_value(explorer.explore(free, ExploreLimits(max_depth=d)), "L[1]",
                               partial=True)[0] for d in (4, 8, 12)]
    assert seen[0] < seen[1] < seen[2]


def test_bounded_verdicts():
    free = load_model(fixture_path("scheduler_free"))
    v = temporal.check_property(free, "wait_bounded[1]", mode=6)
    assert v.unknown and v.frontier_depth == 6
    rr = load_model(fixture_path("scheduler_rr"))
    v = temporal.check_property(rr, "wait_bounded[1]")
    assert v.holds and v.sup == 1
    with pytest.raises(ValueError):
        temporal.check_property(rr, "wait_bounded[1]", mode=0)


def test_eq1_verdicts():
    rr = load_model(fixture_path("scheduler_rr"))
    v = temporal.check_property(rr, "live[2]")
    assert v.holds and v.bound == 1
    free = load_model(fixture_path("scheduler_free"))
    v = temporal.check_property(free, "live[2]")
    assert v.fails and v.loop_start is not None


def test_unknown_on_truncation():
    free = load_model(fixture_path("scheduler_free"))
    g = explorer.explore(free, ExploreLimits(max_depth=3))
    assert temporal.decide(g, f(free, "always L[1] < 100")).unknown
    # alternating the processes is a cycle inside the explored region
    v = temporal.decide(g, f(free, "eventually L[1] = 3"))
    assert v.fails and v.loop_start is not None
    assert temporal.decide(g, f(free, "next (X[1] or X[2])")).holds


def test_nested_and_next_atoms():
    m = load_model(fixture_path("scheduler_quantum"))
    g = explorer.explore(m)
    lab = Labeling(g)
    p = f(m, "globally (X[1] implies next (X[1] or D[1] > 0 or not X[1]'))")
    assert lab.label(p)[0] is True
    q = f(m, "possible_next (X[1]' = X[1])")
    assert all(v is True for v in lab.label(q))


@pytest.mark.parametrize("seed", range(30))
def test_operator_invariants(seed):
    rng = random.Random(seed)
    m = load_model(oracles.random_model_source(rng))
    g = explorer.explore(m)
    lab = Labeling(g)
    for text in oracles.random_atoms(rng):
        atom = f(m, text)
        ws = [lab.label(temporal.Within(n, atom)) for n in range(len(g) + 2)]
        ev = lab.label(temporal.Eventually(atom))
        al, gl = lab.label(temporal.Always(atom)), lab.label(temporal.Globally(atom))
        for i in range(len(g)):
            col = [w[i] for w in ws]
            assert col == sorted(col)  # monotone in n
            assert ev[i] == col[-1]
            if ev[i]:
                b = lab.bound(temporal.Eventually(atom), i)
                assert col[b] and (b == 0 or not col[b - 1])
            assert not al[i] or gl[i]


@pytest.mark.parametrize("seed", range(30))
def test_witnesses_replay_and_violate(seed):
    rng = random.Random(100 + seed)
    m = load_model(oracles.random_model_source(rng))
    g = explorer.explore(m)
    for text in oracles.random_atoms(rng):
        atom = f(m, text)
        for p in (temporal.Globally(atom), temporal.Always(atom), temporal.Eventually(atom),
                  temporal.Within(2, atom), temporal.Next(atom)):
            v = temporal.decide(g, p)
            if not v.fails:
                continue
            run = kernel.run_trace(m, v.witness)
            assert run.ok
            last = run.states[-1]
            if isinstance(p, temporal.Globally):
                assert not atom.fn(last)
            elif isinstance(p, temporal.Always):
                assert not atom.fn(last) or not kernel.defined_events(m, last)
            elif isinstance(p, temporal.Eventually):
                assert not any(atom.fn(s) for s in run.states)
                if v.loop_start is None:
                    assert not kernel.defined_events(m, last)
                else:
                    assert run.states[v.loop_start] == last


def test_bound_of_composite_properties():
    m = load_model(fixture_path("scheduler_rr"), {"N": 3})
    g = explorer.explore(m)
    lab = Labeling(g)
    p = f(m, "eventually X[2] and eventually X[3]")
    assert lab.bound(p, 0) == max(lab.bound(p.left, 0), lab.bound(p.right, 0))
    assert lab.bound(f(m, "globally eventually X[1]"), 0) == 2
    assert lab.bound(f(m, "X[1]"), 0) is None


def test_formula_text():
    m = load_model(fixture_path("scheduler_rr"))
    p = m.properties["live[1]"]
    assert str(p) == "globally (R[1] implies eventually X[1])"
    assert temporal.property_deps(p) == {"R[1]", "X[1]"}
