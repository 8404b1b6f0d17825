"""The ``.rpl`` frontend: tokenizer, parser, space inference and evaluator."""

from .ast import Program, print_mexpr, print_program, print_sexpr
from .diagnostics import FrontendError, LexError, ParseError, Span, SpaceError
from .evaluate import DslKernel, Evaluation, RunReport, evaluate, run_source
from .infer import Judgment, infer_spaces
from .lexer import Token, tokenize
from .parser import parse, parse_mexpr


def format_source(text: str) -> str:
    """Canonical formatting of a program."""
    return print_program(parse(text))


__all__ = [
    "DslKernel",
    "Evaluation",
    "FrontendError",
    "Judgment",
    "LexError",
    "ParseError",
    "Program",
    "RunReport",
    "Span",
    "SpaceError",
    "Token",
    "evaluate",
    "format_source",
    "infer_spaces",
    "parse",
    "parse_mexpr",
    "print_mexpr",
    "print_program",
    "print_sexpr",
    "run_source",
    "tokenize",
]
