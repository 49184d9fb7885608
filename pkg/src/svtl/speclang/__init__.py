"""The ``.svl`` model language: parser, printer and static checker."""

from .checker import check_static, compile_formula, load_model
from .parser import parse, parse_expr
from .printer import pretty_print

__all__ = ["parse", "parse_expr", "pretty_print", "check_static", "load_model", "compile_formula"]
