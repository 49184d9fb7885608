from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings

import oracles
import strategies
from svtl import FIXTURES, fixture_path, kernel, load_model
from svtl.errors import SpecError
from svtl.speclang import ast, check_static, compile_formula, parse, parse_expr, pretty_print
from svtl.speclang.printer import format_number

MINIMAL = "alphabet (a)\nvar v : bool init false { otherwise -> v }\nguard (a) when not v\n"


def diagnostics(src, **consts):
    with pytest.raises(SpecError) as info:
        load_model(src, consts or None)
    return info.value.diagnostics


def test_minimal_model():
    sm = parse(MINIMAL)
    kinds = [type(f).__name__ for f in sm.forms]
    assert kinds == ["AlphabetDecl", "VarDecl", "GuardDecl"]
    m = check_static(sm)
    assert len(m.vars) == 1 and m.vars[0].name == "v"


def test_golden_round_robin_ast():
    sm = parse(fixture_path("scheduler_rr").read_text())
    f = sm.forms
    assert f[0] == ast.ConstDecl("N", ast.Num(Fraction(2)))
    assert f[1] == ast.DomainRange("proc", ast.Num(Fraction(1)), ast.Name("N"))
    assert f[2] == ast.AlphabetDecl((ast.EventSig("sched", ("proc",)),))
    turn = f[3]
    assert isinstance(turn, ast.VarDecl) and turn.sort == "rat"
    assert turn.name == ast.Name("turn") and turn.init == ast.Num(Fraction(2))
    assert [c.otherwise for c in turn.clauses] == [False, False, True]
    assert turn.clauses[0].pattern == ast.Pattern("sched", (ast.Name("p"),))
    assert f[4] == ast.GuardDecl(ast.Pattern("sched", (ast.Name("p"),)),
                                 ast.Binary("=", ast.Name("p"), ast.Name("turn")))
    loop = f[5]
    assert isinstance(loop, ast.Forall) and (loop.var, loop.domain) == ("p", "proc")
    L = loop.body[2]
    assert L.name == ast.Name("L", (ast.Name("p"),))
    guard = L.clauses[0].guard
    assert guard == ast.Binary("and", ast.Name("R", (ast.Name("p"),), True),
                               ast.Unary("not", ast.Name("X", (ast.Name("p"),), True)))
    assert L.clauses[0].body == ast.Binary("+", ast.Name("L", (ast.Name("p"),)),
                                           ast.Call("m", (ast.Name("a"),)))
    live = loop.body[3]
    assert str(live.name.ident) == "live"
    assert live.formula == ast.Temporal("globally", ast.Binary(
        "implies", ast.Name("R", (ast.Name("p"),)),
        ast.Temporal("eventually", ast.Name("X", (ast.Name("p"),)))))


def test_spans_recorded():
    sm = parse(MINIMAL)
    var = sm.forms[1]
    assert (var.span.line, var.span.col) == (2, 1)
    assert var.clauses[0].body.span.line == 2


def test_comments_are_not_preserved():
    a = parse("; header\nalphabet (a) ; trailing\n")
    b = parse("alphabet (a)\n")
    assert a == b
    assert ";" not in pretty_print(a)


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_round_trip_and_idempotence(name):
    sm = parse(fixture_path(name).read_text())
    text = pretty_print(sm)
    assert parse(text) == sm
    assert pretty_print(parse(text)) == text


@settings(max_examples=300, deadline=None, suppress_health_check=list(HealthCheck))
@given(strategies.exprs)
def test_expression_round_trip(e):
    assert parse_expr(pretty_print(ast.SourceModel((ast.PropertyDecl(ast.Name("p"), e),)))
                      .split("=", 1)[1]) == e


def test_format_number():
    assert format_number(Fraction(1, 10)) == "0.1"
    assert format_number(Fraction(5, 2)) == "2.5"
    assert format_number(Fraction(7)) == "7"
    assert parse_expr("1/3") == ast.Binary("/", ast.Num(Fraction(1)), ast.Num(Fraction(3)))


@pytest.mark.parametrize("src,line,col", [
    ("alphabet (a)\nvar x : rat init 0 { on (a) -> x + 1 \n", 2, 20),
    ("component c {\n alphabet (a)\n", 1, 13),
    ("property p = (x and y\n", 1, 14),
])
def test_unbalanced_reports_opening(src, line, col):
    with pytest.raises(SpecError) as info:
        parse(src)
    [d] = info.value.diagnostics
    assert (d.line, d.col, d.rule) == (line, col, "syntax")


@pytest.mark.parametrize("src,rule", [
    ("alphabet (a)\nvar x : rat init 0 { on (a) -> y | otherwise -> x }", "resolve"),
    ("alphabet (a)\nvar x : bool init false { otherwise -> y' }\n"
     "var y : bool init false { otherwise -> x' }", "cycle"),
    ("alphabet (a)\nvar x : bool init false { on (a) -> true }", "otherwise"),
    ("alphabet (a)\nvar x : bool init false { otherwise -> x' }", "prime"),
    ("alphabet (a)\nvar x : bool init false { otherwise -> x + 1 }", "sort"),
    ("domain d = 3..1\nalphabet (a d)", "domain"),
    ("alphabet (a)\nmeasure { on (a) -> 0 - 1 }", "measure"),
    ("const K = 1 / 0\nalphabet (a)", "arith"),
    ("alphabet (a)\nalphabet (a)", "duplicate"),
    ("alphabet (a)\nvar x : bool init false { otherwise -> x }\n"
     "var x : bool init true { otherwise -> x }", "duplicate"),
    ("alphabet (a)\nguard (b) when true", "resolve"),
    ("domain d = 1..2\nalphabet (a d)\nguard (a 3) when true", "domain"),
    ("alphabet (a)\nvar x : bool init false { otherwise -> x }\n"
     "property p = eventually (x + 1)", "sort"),
])
def test_static_diagnostics(src, rule):
    ds = diagnostics(src)
    assert ds and ds[0].rule == rule, ds
    assert ds[0].line >= 1


def test_cycle_diagnostic_names_the_cycle():
    [d] = diagnostics("alphabet (a)\nvar x : bool init false { otherwise -> y' }\n"
                      "var y : bool init false { otherwise -> x' }")
    assert "x'" in d.message and "y'" in d.message


def test_emit_determinism_and_component_checks():
    base = fixture_path("inout").read_text()
    assert "emit {" in base
    bad = base.replace("emit {", "emit {\n    on (sched q) -> (nonsense)\n  |", 1)
    assert any(d.rule in ("emit", "resolve") for d in diagnostics(bad))


def test_unknown_const_override():
    assert diagnostics(MINIMAL, Q=3)[0].rule == "resolve"


def test_const_override_changes_model():
    m2 = load_model(fixture_path("scheduler_rr"))
    m3 = load_model(fixture_path("scheduler_rr"), {"N": 3})
    assert "L[3]" not in m2.index and "L[3]" in m3.index


def test_load_model_accepts_path_and_text():
    p = fixture_path("scheduler_rr")
    assert load_model(p).name == load_model(str(p)).name == "scheduler_rr"
    assert load_model(p.read_text(), name="x").name == "x"


def test_measure_default_is_one():
    m = load_model(MINIMAL)
    assert m.measure[kernel.Event("a")] == 1


def test_compile_formula():
    m = load_model(fixture_path("scheduler_rr"))
    p = compile_formula(m, "within 1 X[2]")
    assert str(p) == "within 1 X[2]"
    with pytest.raises(SpecError):
        compile_formula(m, "eventually Y[2]")


def test_forall_expansion():
    m = load_model(fixture_path("scheduler_rr"), {"N": 4})
    assert [n for n in m.names if n.startswith("X[")] == ["X[1]", "X[2]", "X[3]", "X[4]"]
    assert set(m.properties) >= {f"live[{p}]" for p in range(1, 5)}


@pytest.mark.parametrize("seed", range(20))
def test_accepted_models_step_without_errors(seed):
    import random

    rng = random.Random(seed)
    m = load_model(oracles.random_model_source(rng))
    for _ in range(5):
        z, _ = oracles.random_walk(m, rng, 30)
        kernel.run_trace(m, z)


@pytest.mark.parametrize("data", [b"", b"\xff\xfe", b"var", b"alphabet ((", b"}" * 50,
                                  "property p = x’".encode(), b"\x00" * 10])
def test_parse_never_crashes(data):
    try:
        parse(data)
    except SpecError as exc:
        assert exc.diagnostics
