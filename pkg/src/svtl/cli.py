"""``svtl`` command line: run traces, explore models, check properties.

Exit codes: 0 ok, 1 load or usage error, 2 undefined transition,
3 some property fails, 4 some property is unknown (and none fails).
"""

from __future__ import annotations

import argparse
import re
import sys
from fractions import Fraction
from pathlib import Path

from . import explorer, kernel, temporal
from .errors import EvalError, RendezvousViolation, SpecError, SvtlError, TraceSyntaxError
from .explorer import ExploreLimits
from .kernel import format_value
from .speclang import load_model, pretty_print, parse

EXIT_OK = 0
EXIT_LOAD = 1
EXIT_UNDEFINED = 2
EXIT_FAILS = 3
EXIT_UNKNOWN = 4


def _plural(n, word):
    return f"{n} {word}" if n == 1 else f"{n} {word}s"


def _const_arg(text):
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    value = value.strip()
    try:
        v = Fraction(value)
    except ValueError:
        v = {"true": True, "false": False}.get(value, value)
    return name.strip(), v


def _positive(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def build_parser():
    ap = argparse.ArgumentParser(prog="svtl", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("model", help="model file (.svl)")
        p.add_argument("--const", action="append", type=_const_arg, default=[],
                       metavar="NAME=VALUE", help="override a declared constant")
        p.add_argument("-v", "--verbose", action="store_true")

    def limits(p):
        p.add_argument("--max-states", type=_positive, default=None,
                       help="state limit (default: $SVTL_MAX_STATES or 100000)")
        p.add_argument("--bounded", type=_positive, default=None, metavar="D",
                       help="explore only to depth D")

    p = sub.add_parser("run", help="fold a trace file and print every state")
    common(p)
    p.add_argument("trace", help="trace file, one (event ...) per line")
    p.add_argument("--vars", default=None, help="comma-separated variables to show")

    p = sub.add_parser("check", help="decide the model's properties")
    common(p)
    limits(p)
    p.add_argument("--prop", action="append", default=[], help="property name (repeatable)")
    p.add_argument("--witness-dir", default="witnesses",
                   help="where failing properties write their witness traces")

    p = sub.add_parser("explore", help="build the reachable state graph")
    common(p)
    limits(p)
    p.add_argument("--dot", default=None, help="write the graph in DOT format")
    p.add_argument("--vars", default=None, help="variables shown in DOT labels")

    p = sub.add_parser("bound", help="supremum of a rational variable over reachable states")
    common(p)
    limits(p)
    p.add_argument("var")

    p = sub.add_parser("fmt", help="print the model in canonical form")
    p.add_argument("model")
    return ap


class _Out:
    def __init__(self, stdout, stderr):
        self.stdout = stdout
        self.stderr = stderr

    def line(self, text=""):
        print(text, file=self.stdout)

    def err(self, text):
        print(text, file=self.stderr)


def _load(args, out):
    path = Path(args.model)
    try:
        return load_model(path, dict(args.const))
    except OSError as exc:
        out.err(f"{args.model}: {exc.strerror or exc}")
    except SpecError as exc:
        for d in exc.diagnostics:
            out.err(f"{args.model}:{d}")
    return None


def _names(model, text, out):
    if text is None:
        return model.names
    names = [n.strip() for n in text.split(",") if n.strip()]
    unknown = [n for n in names if n not in model.index]
    if unknown:
        out.err(f"unknown variable {unknown[0]!r}")
        return None
    return names


def _limits(args):
    base = ExploreLimits.default(args.max_states)
    return ExploreLimits(base.max_states, args.bounded or base.max_depth)


def cmd_run(args, out):
    model = _load(args, out)
    if model is None:
        return EXIT_LOAD
    names = _names(model, args.vars, out)
    if names is None:
        return EXIT_LOAD
    try:
        z = kernel.read_trace(Path(args.trace).read_text(encoding="utf-8"))
    except OSError as exc:
        out.err(f"{args.trace}: {exc.strerror or exc}")
        return EXIT_LOAD
    except TraceSyntaxError as exc:
        out.err(f"{args.trace}: {exc}")
        return EXIT_LOAD
    try:
        result = kernel.run_trace(model, z)
    except (EvalError, RendezvousViolation) as exc:
        out.err(f"error: {exc}")
        return EXIT_LOAD
    for k, s in enumerate(result.states):
        event = "init" if k == 0 else str(z[k - 1])
        out.line(f"{k} {event}: {model.format_state(s, names)}")
    if result.error is not None:
        out.err(f"error: {result.error}")
        return EXIT_UNDEFINED
    return EXIT_OK


def _witness_path(args, model, name):
    safe = re.sub(r"[^\w.-]+", "_", name).strip("_")
    return Path(args.witness_dir) / f"{model.name}.{safe}.trace"


def _verdict_line(name, v: temporal.Verdict, witness_file=None):
    parts = [name, v.outcome]
    if v.holds and v.bound is not None:
        parts.append(f"bound={v.bound}")
    if v.fails:
        parts.append(str(witness_file))
        if v.loop_start is not None:
            parts.append(f"loop={v.loop_start}")
    if v.unknown:
        parts.append(f"depth={v.frontier_depth}")
    if v.sup is not None:
        parts.append(f"sup={format_value(v.sup)}")
    return " ".join(parts)


def _exit_for(verdicts):
    if any(v.fails for v in verdicts):
        return EXIT_FAILS
    if any(v.unknown for v in verdicts):
        return EXIT_UNKNOWN
    return EXIT_OK


def cmd_check(args, out):
    model = _load(args, out)
    if model is None:
        return EXIT_LOAD
    names = args.prop or list(model.properties)
    missing = [n for n in names if n not in model.properties]
    if missing:
        out.err(f"{args.model}: no property named {missing[0]!r}")
        return EXIT_LOAD
    if not names:
        out.line("no properties declared")
        return EXIT_OK
    limits = _limits(args)
    graphs = {}  # one exploration per distinct cone of influence
    verdicts = []
    try:
        for name in names:
            p = model.properties[name]
            cone = model.cone(temporal.property_deps(p))
            if cone not in graphs:
                graphs[cone] = explorer.explore(model, limits, keep=cone)
            g = graphs[cone]
            v = temporal.decide(g, p)
            verdicts.append(v)
            wfile = None
            if v.fails:
                wfile = _witness_path(args, model, name)
                wfile.parent.mkdir(parents=True, exist_ok=True)
                w = explorer.Witness(v.witness, v.loop_start)
                comments = [f"witness: {name} fails in {model.name}", f"property: {p}"]
                wfile.write_text(kernel.format_trace(v.witness, comments + w.comments()),
                                 encoding="utf-8")
            out.line(_verdict_line(name, v, wfile))
            if args.verbose:
                keep = sorted(cone, key=model.index.get)
                out.line(explorer.dump(g, keep).rstrip("\n"))
    except (EvalError, RendezvousViolation) as exc:
        out.err(f"error: {exc}")
        return EXIT_LOAD
    return _exit_for(verdicts)


def cmd_explore(args, out):
    model = _load(args, out)
    if model is None:
        return EXIT_LOAD
    names = _names(model, args.vars, out)
    if names is None:
        return EXIT_LOAD
    try:
        g = explorer.explore(model, _limits(args))
    except (EvalError, RendezvousViolation) as exc:
        out.err(f"error: {exc}")
        return EXIT_LOAD
    status = "complete" if g.complete else f"complete=false frontier_depth={g.frontier_depth}"
    out.line(f"{_plural(len(g), 'node')}, {_plural(g.edge_count, 'edge')}, "
             f"{_plural(len(g.dead_ends), 'dead end')}, {status}")
    if g.dead_ends and args.verbose:
        for i in g.dead_ends:
            out.line(f"dead end {i}: {model.format_state(g.states[i], names)}")
    if args.verbose:
        out.line(explorer.dump(g, names).rstrip("\n"))
    if args.dot:
        Path(args.dot).write_text(explorer.export_dot(g, names), encoding="utf-8")
    return EXIT_OK


def cmd_bound(args, out):
    model = _load(args, out)
    if model is None:
        return EXIT_LOAD
    if args.var not in model.index:
        out.err(f"{args.model}: no state variable named {args.var!r}")
        return EXIT_LOAD
    if model.var(args.var).sort != kernel.RAT:
        out.err(f"{args.var} is not rational-valued")
        return EXIT_LOAD
    try:
        g = explorer.explore(model, _limits(args), keep=model.cone([args.var]))
    except (EvalError, RendezvousViolation) as exc:
        out.err(f"error: {exc}")
        return EXIT_LOAD
    verdicts = []
    if g.complete:
        sup, where = temporal.sup_value(g, args.var)
        out.line(f"{args.var} sup={format_value(sup)} node={where} "
                 f"state: {model.format_state(g.states[where], sorted(g.keep, key=model.index.get))}")
    else:
        seen, _ = temporal.sup_value(g, args.var, partial=True)
        verdicts.append(temporal.Verdict(temporal.UNKNOWN, frontier_depth=g.frontier_depth))
        out.line(f"{args.var} UNKNOWN depth={g.frontier_depth} "
                 f"explored_max={format_value(seen)} complete=false")
    lab = temporal.Labeling(g)
    for name, p in model.properties.items():
        if isinstance(p, (temporal.Bounded, temporal.BoundCompare)) and p.var == args.var:
            v = temporal.decide(g, p, labeling=lab)
            verdicts.append(v)
            line = [name, v.outcome]
            if v.unknown:
                line.append(f"depth={v.frontier_depth}")
            out.line(" ".join(line))
    return _exit_for(verdicts)


def cmd_fmt(args, out):
    try:
        out.line(pretty_print(parse(Path(args.model).read_bytes())).rstrip("\n"))
    except OSError as exc:
        out.err(f"{args.model}: {exc.strerror or exc}")
        return EXIT_LOAD
    except SpecError as exc:
        for d in exc.diagnostics:
            out.err(f"{args.model}:{d}")
        return EXIT_LOAD
    return EXIT_OK


COMMANDS = {"run": cmd_run, "check": cmd_check, "explore": cmd_explore, "bound": cmd_bound,
            "fmt": cmd_fmt}


def main(argv=None, stdout=None, stderr=None) -> int:
    out = _Out(stdout or sys.stdout, stderr or sys.stderr)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_LOAD if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args, out)
    except SvtlError as exc:
        out.err(f"error: {exc}")
        return EXIT_LOAD


if __name__ == "__main__":
    sys.exit(main())
