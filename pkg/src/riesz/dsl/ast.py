"""Syntax trees of ``.rpl`` programs and their canonical printer.

Spans are carried for diagnostics but excluded from equality, so a tree
reparsed from its printed form compares equal to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import Span


def _span():
    return field(default=None, compare=False, repr=False)


# -- scalar expressions -------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: int | float
    span: Span | None = _span()


@dataclass(frozen=True)
class Str:
    value: str
    span: Span | None = _span()


@dataclass(frozen=True)
class Bool:
    value: bool
    span: Span | None = _span()


@dataclass(frozen=True)
class Var:
    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" | "not"
    arg: object
    span: Span | None = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object
    span: Span | None = _span()


@dataclass(frozen=True)
class Pow:
    base: object
    k: int
    span: Span | None = _span()


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    span: Span | None = _span()


@dataclass(frozen=True)
class IfS:
    cond: object
    then: object
    orelse: object
    span: Span | None = _span()


@dataclass(frozen=True)
class FnLit:
    param: str
    body: object
    span: Span | None = _span()


# -- measure expressions ------------------------------------------------------


@dataclass(frozen=True)
class DiracE:
    arg: object
    span: Span | None = _span()


@dataclass(frozen=True)
class UniformE:
    a: float
    b: float
    span: Span | None = _span()


@dataclass(frozen=True)
class BernoulliE:
    p: float
    span: Span | None = _span()


@dataclass(frozen=True)
class CategoricalE:
    items: tuple  # ((literal, weight), ...)
    span: Span | None = _span()


@dataclass(frozen=True)
class BindE:
    name: str
    source: object
    body: object
    span: Span | None = _span()


@dataclass(frozen=True)
class MapE:
    fn: FnLit
    measure: object
    span: Span | None = _span()


@dataclass(frozen=True)
class ProdE:
    left: object
    right: object
    span: Span | None = _span()


@dataclass(frozen=True)
class MVar:
    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class IfM:
    cond: object
    then: object
    orelse: object
    span: Span | None = _span()


@dataclass(frozen=True)
class WidenE:
    measure: object
    span: Span | None = _span()


MEASURE_NODES = (DiracE, UniformE, BernoulliE, CategoricalE, BindE, MapE, ProdE, MVar, IfM, WidenE)


# -- statements ---------------------------------------------------------------


@dataclass(frozen=True)
class Let:
    name: str
    expr: object
    span: Span | None = _span()


@dataclass(frozen=True)
class Expect:
    fn: FnLit
    measure: object
    span: Span | None = _span()


@dataclass(frozen=True)
class Check:
    law: str
    args: tuple
    span: Span | None = _span()


@dataclass(frozen=True)
class Program:
    statements: tuple
    span: Span | None = _span()


# ---------------------------------------------------------------------------
# printer

BINARY_SYMBOL = {
    "or": "or", "and": "and",
    "lt": "<", "le": "<=", "gt": ">", "ge": ">=", "eq": "==", "ne": "!=",
    "add": "+", "sub": "-", "mul": "*", "div": "/",
}
PREC = {"or": 1, "and": 2, "lt": 4, "le": 4, "gt": 4, "ge": 4, "eq": 4, "ne": 4, "add": 5, "sub": 5, "mul": 6, "div": 6}
NOT_PREC, NEG_PREC, POW_PREC, ATOM_PREC = 3, 7, 8, 9


def format_number(v) -> str:
    if isinstance(v, bool):
        raise TypeError("booleans are not numbers")
    return str(v) if isinstance(v, int) else repr(float(v))


def format_literal(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return format_number(v)
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _prec(e) -> int:
    if isinstance(e, Binary):
        return PREC[e.op]
    if isinstance(e, Unary):
        return NOT_PREC if e.op == "not" else NEG_PREC
    if isinstance(e, Pow):
        return POW_PREC
    if isinstance(e, IfS):
        return 0
    return ATOM_PREC


def _at(e, level: int) -> str:
    text = print_sexpr(e)
    return f"({text})" if _prec(e) < level else text


def print_sexpr(e) -> str:
    if isinstance(e, Num):
        return format_number(e.value)
    if isinstance(e, (Str, Bool)):
        return format_literal(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.name}({', '.join(print_sexpr(a) for a in e.args)})"
    if isinstance(e, IfS):
        return f"if {print_sexpr(e.cond)} then {print_sexpr(e.then)} else {print_sexpr(e.orelse)}"
    if isinstance(e, Pow):
        return f"{_at(e.base, ATOM_PREC)}^{e.k}"
    if isinstance(e, Unary):
        if e.op == "not":
            return f"not {_at(e.arg, NOT_PREC)}"
        inner = _at(e.arg, NEG_PREC)
        return f"-{inner}" if not inner.startswith("-") else f"-({inner})"
    if isinstance(e, Binary):
        p = PREC[e.op]
        # comparisons do not associate; the others associate to the left
        left = _at(e.left, p + 1 if p == 4 else p)
        return f"{left} {BINARY_SYMBOL[e.op]} {_at(e.right, p + 1)}"
    raise TypeError(f"not a scalar expression: {e!r}")


def print_fn(f: FnLit) -> str:
    return f"fn({f.param}) = {print_sexpr(f.body)}"


def _signed(v) -> str:
    return format_number(v)


def print_mexpr(m) -> str:
    if isinstance(m, DiracE):
        return f"dirac({print_sexpr(m.arg)})"
    if isinstance(m, UniformE):
        return f"uniform({_signed(m.a)}, {_signed(m.b)})"
    if isinstance(m, BernoulliE):
        return f"bernoulli({format_number(m.p)})"
    if isinstance(m, CategoricalE):
        return "categorical(" + ", ".join(f"{format_literal(v)}: {format_number(w)}" for v, w in m.items) + ")"
    if isinstance(m, BindE):
        return f"bind {m.name} ~ {print_mexpr(m.source)} in {print_mexpr(m.body)}"
    if isinstance(m, MapE):
        return f"map({print_fn(m.fn)}, {print_mexpr(m.measure)})"
    if isinstance(m, ProdE):
        return f"prod({print_mexpr(m.left)}, {print_mexpr(m.right)})"
    if isinstance(m, MVar):
        return m.name
    if isinstance(m, IfM):
        return f"if {print_sexpr(m.cond)} then {print_mexpr(m.then)} else {print_mexpr(m.orelse)}"
    if isinstance(m, WidenE):
        return f"widen({print_mexpr(m.measure)})"
    raise TypeError(f"not a measure expression: {m!r}")


def print_arg(a) -> str:
    return print_fn(a) if isinstance(a, FnLit) else print_mexpr(a)


def print_statement(s) -> str:
    if isinstance(s, Let):
        return f"let {s.name} = {print_mexpr(s.expr)};"
    if isinstance(s, Expect):
        return f"expect {print_fn(s.fn)} of {print_mexpr(s.measure)};"
    if isinstance(s, Check):
        return f"check {s.law}({', '.join(print_arg(a) for a in s.args)});"
    raise TypeError(f"not a statement: {s!r}")


def print_program(p: Program) -> str:
    """Canonical source text: one statement per line."""
    return "".join(print_statement(s) + "\n" for s in p.statements)
