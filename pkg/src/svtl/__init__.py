"""State variables over event traces, with definedness-aware temporal checks."""

from importlib import resources

from .errors import (EvalError, GraphTruncated, NoEmission, NoWitness, RendezvousViolation,
                     SpecError, SvtlError, UndefinedTransition, UnknownExport)
from .explorer import ExploreLimits, TransitionGraph, explore
from .kernel import Event, Model, defined_events, eval_var, init_state, run_trace, step_state
from .speclang import check_static, load_model, parse, pretty_print
from .temporal import Verdict, check_property

__version__ = "0.1.0"

FIXTURES = ("scheduler_rr", "scheduler_free", "scheduler_quantum", "inout", "rendezvous")


def fixture_path(name: str):
    """Filesystem path of a bundled example model, e.g. ``fixture_path("inout")``."""
    if name not in FIXTURES:
        raise KeyError(f"no bundled fixture named {name!r}")
    return resources.files(__package__).joinpath("fixtures", f"{name}.svl")


__all__ = [
    "Event", "Model", "init_state", "defined_events", "step_state", "eval_var", "run_trace",
    "parse", "pretty_print", "check_static", "load_model", "explore", "ExploreLimits",
    "TransitionGraph", "check_property", "Verdict", "fixture_path", "FIXTURES",
    "SvtlError", "SpecError", "UndefinedTransition", "EvalError", "NoEmission",
    "RendezvousViolation", "UnknownExport", "GraphTruncated", "NoWitness",
]
