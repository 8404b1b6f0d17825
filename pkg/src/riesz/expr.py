"""Closed expression trees over points.

One small language serves both bounded observables (real-valued) and
continuous maps between spaces (value-valued).  Trees are evaluated
vectorised over batches, analysed by interval arithmetic to certify sup-norm
bounds and codomains, and round-trip through a canonical S-expression text
form such as ``(min (exp x) 2)``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .errors import DiscontinuousFunction, ExpressionError, UnboundedFunction
from .spaces import (
    FiniteSet,
    IntRange,
    ProductSpace,
    RealInterval,
    RealLine,
    SpaceDescriptor,
    _canonical,
    batch_len,
    is_real,
    same_atom,
)

UNARY = ("neg", "exp", "sin", "cos", "abs", "fst", "snd", "not")
BINARY = ("add", "sub", "mul", "div", "min", "max", "pair", "lt", "le", "gt", "ge", "eq", "ne", "and", "or")
COMPARISONS = ("lt", "le", "gt", "ge", "eq", "ne")
ARITY = {**{op: 1 for op in UNARY}, **{op: 2 for op in BINARY}, "if": 3, "clamp": 3, "pow": 1}


@dataclass(frozen=True)
class Expr:
    """Node of an expression tree.

    ``op`` is one of ``x`` (the argument), ``const``, ``param`` or an
    operator name; ``value`` carries the payload of ``const``/``param`` and
    the integer exponent of ``pow``.
    """

    op: str
    args: tuple = ()
    value: Any = None

    def __post_init__(self):
        if self.op in ("x", "const", "param"):
            if self.args:
                raise ExpressionError(f"{self.op} takes no children")
            if self.op == "param" and not isinstance(self.value, str):
                raise ExpressionError("param needs a name")
            return
        if self.op not in ARITY:
            raise ExpressionError(f"unknown operator {self.op!r}")
        if len(self.args) != ARITY[self.op]:
            raise ExpressionError(f"{self.op} expects {ARITY[self.op]} argument(s), got {len(self.args)}")
        if self.op == "pow" and not (isinstance(self.value, int) and not isinstance(self.value, bool) and self.value >= 0):
            raise ExpressionError("pow needs a non-negative integer exponent")
        if self.op == "clamp":
            lo, hi = self.args[1], self.args[2]
            if lo.op != "const" or hi.op != "const" or not lo.value <= hi.value:
                raise ExpressionError("clamp bounds must be constants with lo <= hi")

    # builder sugar; == keeps structural meaning
    def __add__(self, other):
        return Expr("add", (self, as_expr(other)))

    def __radd__(self, other):
        return Expr("add", (as_expr(other), self))

    def __sub__(self, other):
        return Expr("sub", (self, as_expr(other)))

    def __rsub__(self, other):
        return Expr("sub", (as_expr(other), self))

    def __mul__(self, other):
        return Expr("mul", (self, as_expr(other)))

    def __rmul__(self, other):
        return Expr("mul", (as_expr(other), self))

    def __truediv__(self, other):
        return Expr("div", (self, as_expr(other)))

    def __rtruediv__(self, other):
        return Expr("div", (as_expr(other), self))

    def __neg__(self):
        return Expr("neg", (self,))

    def __pow__(self, k: int):
        return Expr("pow", (self,), k)

    def __str__(self):
        return to_sexpr(self)


X = Expr("x")


def const(v) -> Expr:
    if isinstance(v, np.generic):
        v = v.item()
    if not isinstance(v, (bool, int, float, str)):
        raise ExpressionError(f"unsupported constant {v!r}")
    if isinstance(v, float) and not math.isfinite(v):
        raise ExpressionError("constants must be finite")
    return Expr("const", (), v)


def param(name: str) -> Expr:
    return Expr("param", (), name)


def as_expr(v) -> Expr:
    return v if isinstance(v, Expr) else const(v)


def lift_value(v) -> Expr:
    """Constant expression denoting the point ``v``."""
    if isinstance(v, tuple):
        return Expr("pair", (lift_value(v[0]), lift_value(v[1])))
    return const(v)


def op(name: str, *args, value=None) -> Expr:
    return Expr(name, tuple(as_expr(a) for a in args), value)


def fst(e) -> Expr:
    return op("fst", e)


def snd(e) -> Expr:
    return op("snd", e)


def pair(a, b) -> Expr:
    return op("pair", a, b)


def exp(e) -> Expr:
    return op("exp", e)


def sin(e) -> Expr:
    return op("sin", e)


def cos(e) -> Expr:
    return op("cos", e)


def absolute(e) -> Expr:
    return op("abs", e)


def minimum(a, b) -> Expr:
    return op("min", a, b)


def maximum(a, b) -> Expr:
    return op("max", a, b)


def clamp(e, lo, hi) -> Expr:
    return op("clamp", e, lo, hi)


def if_(c, a, b) -> Expr:
    return op("if", c, a, b)


def eq(a, b) -> Expr:
    return op("eq", a, b)


def substitute(expr: Expr, replacement: Expr) -> Expr:
    """Replace every occurrence of the argument ``x`` by ``replacement``."""
    if expr.op == "x":
        return replacement
    if not expr.args:
        return expr
    return Expr(expr.op, tuple(substitute(a, replacement) for a in expr.args), expr.value)


def bind_params(expr: Expr, values: Mapping[str, Any]) -> Expr:
    if expr.op == "param":
        if expr.value not in values:
            raise ExpressionError(f"unbound parameter {expr.value!r}")
        return lift_value(values[expr.value])
    if not expr.args:
        return expr
    return Expr(expr.op, tuple(bind_params(a, values) for a in expr.args), expr.value)


def free_params(expr: Expr) -> set:
    if expr.op == "param":
        return {expr.value}
    out = set()
    for a in expr.args:
        out |= free_params(a)
    return out


def uses_argument(expr: Expr) -> bool:
    return expr.op == "x" or any(uses_argument(a) for a in expr.args)


def depth(expr: Expr) -> int:
    return 1 + max((depth(a) for a in expr.args), default=0)


# ---------------------------------------------------------------------------
# evaluation


def _full(n: int, v):
    if isinstance(v, bool):
        return np.full(n, v, dtype=bool)
    if isinstance(v, str):
        out = np.empty(n, dtype=object)
        out[:] = v
        return out
    return np.full(n, float(v))


def _where(c, a, b):
    if isinstance(a, tuple):
        return tuple(_where(c, ai, bi) for ai, bi in zip(a, b))
    if a.dtype == object or b.dtype == object:
        out = np.empty(len(c), dtype=object)
        out[:] = np.where(c, a.astype(object), b.astype(object))
        return out
    return np.where(c, a, b)


def _eq(a, b):
    if isinstance(a, tuple):
        return _eq(a[0], b[0]) & _eq(a[1], b[1])
    if a.dtype == object or b.dtype == object:
        return np.array([same_atom(x, y) for x, y in zip(a, b)], dtype=bool)
    return np.asarray(a == b, dtype=bool)


def evaluate(expr: Expr, batch, n: int | None = None):
    """Evaluate ``expr`` over a batch of argument points."""
    if n is None:
        n = batch_len(batch)
    o = expr.op
    if o == "x":
        return batch
    if o == "const":
        return _full(n, expr.value)
    if o == "param":
        raise ExpressionError(f"unbound parameter {expr.value!r}")
    if o == "if":
        c = np.asarray(evaluate(expr.args[0], batch, n), dtype=bool)
        return _where(c, evaluate(expr.args[1], batch, n), evaluate(expr.args[2], batch, n))
    args = [evaluate(a, batch, n) for a in expr.args]
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if o == "fst":
            return args[0][0]
        if o == "snd":
            return args[0][1]
        if o == "pair":
            return (args[0], args[1])
        if o == "add":
            return args[0] + args[1]
        if o == "sub":
            return args[0] - args[1]
        if o == "mul":
            return args[0] * args[1]
        if o == "div":
            return args[0] / args[1]
        if o == "neg":
            return -args[0]
        if o == "min":
            return np.minimum(args[0], args[1])
        if o == "max":
            return np.maximum(args[0], args[1])
        if o == "pow":
            return args[0] ** expr.value
        if o == "exp":
            return np.exp(args[0])
        if o == "sin":
            return np.sin(args[0])
        if o == "cos":
            return np.cos(args[0])
        if o == "abs":
            return np.abs(args[0])
        if o == "clamp":
            return np.clip(args[0], expr.args[1].value, expr.args[2].value)
        if o == "lt":
            return args[0] < args[1]
        if o == "le":
            return args[0] <= args[1]
        if o == "gt":
            return args[0] > args[1]
        if o == "ge":
            return args[0] >= args[1]
        if o == "eq":
            return _eq(args[0], args[1])
        if o == "ne":
            return ~_eq(args[0], args[1])
        if o == "and":
            return np.asarray(args[0], dtype=bool) & np.asarray(args[1], dtype=bool)
        if o == "or":
            return np.asarray(args[0], dtype=bool) | np.asarray(args[1], dtype=bool)
        if o == "not":
            return ~np.asarray(args[0], dtype=bool)
    raise ExpressionError(f"cannot evaluate {o!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# abstract interpretation


@dataclass(frozen=True)
class Iv:
    """Numeric enclosure; ``discrete`` marks dependence on discrete inputs only."""

    lo: float
    hi: float
    integral: bool = False
    discrete: bool = False


@dataclass(frozen=True)
class Fin:
    values: tuple


@dataclass(frozen=True)
class APair:
    left: Any
    right: Any


def abstract_of_space(space: SpaceDescriptor):
    if isinstance(space, ProductSpace):
        return APair(abstract_of_space(space.left), abstract_of_space(space.right))
    if isinstance(space, FiniteSet):
        if space.kind == "number":
            vals = [float(e) for e in space.elements]
            ints = all(isinstance(e, int) for e in space.elements)
            return Iv(min(vals), max(vals), ints, True)
        return Fin(space.elements)
    if isinstance(space, IntRange):
        return Iv(float(space.lo), float(space.hi), True, True)
    if isinstance(space, RealInterval):
        return Iv(space.a, space.b)
    if isinstance(space, RealLine):
        return Iv(-math.inf, math.inf)
    raise ExpressionError(f"unsupported space {space!r}")


def abstract_of_value(v):
    if isinstance(v, tuple):
        return APair(abstract_of_value(v[0]), abstract_of_value(v[1]))
    if is_real(v):
        return Iv(float(v), float(v), isinstance(v, int), True)
    return Fin((v,))


def space_of_abstract(a) -> SpaceDescriptor:
    """Descriptor of the supported kinds covering an enclosure."""
    if isinstance(a, APair):
        return ProductSpace(space_of_abstract(a.left), space_of_abstract(a.right))
    if isinstance(a, Fin):
        return FiniteSet(_canonical(a.values))
    if not (math.isfinite(a.lo) and math.isfinite(a.hi)):
        return RealLine()
    if a.integral:
        return IntRange(int(a.lo), int(a.hi))
    if a.lo < a.hi:
        return RealInterval(a.lo, a.hi)
    return FiniteSet((float(a.lo),))


def join_abstract(a, b):
    if isinstance(a, Iv) and isinstance(b, Iv):
        return Iv(min(a.lo, b.lo), max(a.hi, b.hi), a.integral and b.integral, a.discrete and b.discrete)
    if isinstance(a, Fin) and isinstance(b, Fin):
        vals = list(a.values)
        for v in b.values:
            if not any(same_atom(v, w) for w in vals):
                vals.append(v)
        return Fin(tuple(vals))
    if isinstance(a, APair) and isinstance(b, APair):
        return APair(join_abstract(a.left, b.left), join_abstract(a.right, b.right))
    raise ExpressionError("branches of a conditional have different kinds")


def _pad(v: float, down: bool) -> float:
    if not math.isfinite(v):
        return v
    return math.nextafter(math.nextafter(v, -math.inf if down else math.inf), -math.inf if down else math.inf)


def _mul(a: float, b: float) -> float:
    if a == 0 or b == 0:
        return 0.0
    return a * b


def _exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def _sin_range(lo: float, hi: float, shift: float = 0.0):
    """Enclosure of sin on [lo+shift, hi+shift]."""
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi - lo >= 2 * math.pi:
        return -1.0, 1.0
    lo, hi = lo + shift, hi + shift
    vals = [math.sin(lo), math.sin(hi)]
    top = bottom = False
    k = math.ceil((lo - math.pi / 2) / (2 * math.pi))
    if math.pi / 2 + 2 * math.pi * k <= hi:
        top = True
    k = math.ceil((lo + math.pi / 2) / (2 * math.pi))
    if -math.pi / 2 + 2 * math.pi * k <= hi:
        bottom = True
    out_lo = -1.0 if bottom else max(-1.0, _pad(min(vals), True))
    out_hi = 1.0 if top else min(1.0, _pad(max(vals), False))
    return out_lo, out_hi


def _need_iv(a, where: str) -> Iv:
    if not isinstance(a, Iv):
        raise ExpressionError(f"{where} expects a numeric argument")
    return a


def _need_bool(a, where: str) -> Fin:
    if not (isinstance(a, Fin) and all(isinstance(v, bool) for v in a.values)):
        raise ExpressionError(f"{where} expects a boolean argument")
    return a


def _bools(can_true: bool, can_false: bool) -> Fin:
    vals = ([False] if can_false else []) + ([True] if can_true else [])
    return Fin(tuple(vals))


def _compare(o: str, a, b):
    if isinstance(a, Iv) and isinstance(b, Iv):
        if o == "lt":
            t, f = a.lo < b.hi, a.hi >= b.lo
        elif o == "le":
            t, f = a.lo <= b.hi, a.hi > b.lo
        elif o == "gt":
            t, f = a.hi > b.lo, a.lo <= b.hi
        elif o == "ge":
            t, f = a.hi >= b.lo, a.lo < b.hi
        else:
            overlap = a.lo <= b.hi and b.lo <= a.hi
            point = a.lo == a.hi == b.lo == b.hi
            t, f = overlap, not point
            if o == "ne":
                t, f = f, t
        if t and f and not (a.discrete and b.discrete):
            raise DiscontinuousFunction(
                "comparison on a continuous value is only allowed when it is constant over the domain"
            )
        return _bools(t, f)
    if o not in ("eq", "ne"):
        raise ExpressionError(f"{o} needs numeric arguments")
    if isinstance(a, Fin) and isinstance(b, Fin):
        same = [same_atom(x, y) for x in a.values for y in b.values]
        t = any(same)
        f = not (len(a.values) == len(b.values) == 1 and t)
        if o == "ne":
            t, f = f, t
        return _bools(t, f)
    if isinstance(a, APair) and isinstance(b, APair):
        left = _compare("eq", a.left, b.left)
        right = _compare("eq", a.right, b.right)
        t = True in left.values and True in right.values
        f = False in left.values or False in right.values
        if o == "ne":
            t, f = f, t
        return _bools(t, f)
    raise ExpressionError("eq compares values of different kinds")


def enclose(expr: Expr, arg) -> Any:
    """Abstract value of ``expr`` when the argument ranges over ``arg``."""
    o = expr.op
    if o == "x":
        return arg
    if o == "const":
        return abstract_of_value(expr.value)
    if o == "param":
        raise ExpressionError(f"unbound parameter {expr.value!r}")
    if o == "if":
        c = _need_bool(enclose(expr.args[0], arg), "if")
        branches = []
        if True in c.values:
            branches.append(enclose(expr.args[1], arg))
        if False in c.values:
            branches.append(enclose(expr.args[2], arg))
        out = branches[0]
        for b in branches[1:]:
            out = join_abstract(out, b)
        return out
    args = [enclose(a, arg) for a in expr.args]
    if o == "fst" or o == "snd":
        if not isinstance(args[0], APair):
            raise ExpressionError(f"{o} expects a pair")
        return args[0].left if o == "fst" else args[0].right
    if o == "pair":
        return APair(args[0], args[1])
    if o in COMPARISONS:
        return _compare(o, args[0], args[1])
    if o in ("and", "or"):
        a, b = _need_bool(args[0], o), _need_bool(args[1], o)
        if o == "and":
            return _bools(True in a.values and True in b.values, False in a.values or False in b.values)
        return _bools(True in a.values or True in b.values, False in a.values and False in b.values)
    if o == "not":
        a = _need_bool(args[0], o)
        return _bools(False in a.values, True in a.values)
    ivs = [_need_iv(a, o) for a in args]
    disc = all(a.discrete for a in ivs)
    integ = all(a.integral for a in ivs)
    a = ivs[0]
    if o == "add":
        b = ivs[1]
        return Iv(a.lo + b.lo, a.hi + b.hi, integ, disc)
    if o == "sub":
        b = ivs[1]
        return Iv(a.lo - b.hi, a.hi - b.lo, integ, disc)
    if o == "neg":
        return Iv(-a.hi, -a.lo, integ, disc)
    if o == "mul":
        b = ivs[1]
        ps = [_mul(p, q) for p in (a.lo, a.hi) for q in (b.lo, b.hi)]
        return Iv(min(ps), max(ps), integ, disc)
    if o == "div":
        b = ivs[1]
        if b.lo <= 0 <= b.hi:
            raise UnboundedFunction("division by a quantity that can be zero")
        ps = [p / q for p in (a.lo, a.hi) for q in (b.lo, b.hi) if not (math.isinf(p) and math.isinf(q))]
        if math.isinf(b.lo) or math.isinf(b.hi):
            ps.append(0.0)
        return Iv(min(ps), max(ps), False, disc)
    if o == "min":
        b = ivs[1]
        return Iv(min(a.lo, b.lo), min(a.hi, b.hi), integ, disc)
    if o == "max":
        b = ivs[1]
        return Iv(max(a.lo, b.lo), max(a.hi, b.hi), integ, disc)
    if o == "abs":
        if a.lo >= 0:
            return a
        if a.hi <= 0:
            return Iv(-a.hi, -a.lo, a.integral, a.discrete)
        return Iv(0.0, max(-a.lo, a.hi), a.integral, a.discrete)
    if o == "pow":
        k = expr.value
        if k == 0:
            return Iv(1.0, 1.0, True, True)
        lo_k, hi_k = _powf(a.lo, k), _powf(a.hi, k)
        if k % 2 == 1:
            return Iv(lo_k, hi_k, a.integral, a.discrete)
        if a.lo <= 0 <= a.hi:
            return Iv(0.0, max(lo_k, hi_k), a.integral, a.discrete)
        return Iv(min(lo_k, hi_k), max(lo_k, hi_k), a.integral, a.discrete)
    if o == "exp":
        return Iv(max(0.0, _pad(_exp(a.lo), True)), _pad(_exp(a.hi), False), False, a.discrete)
    if o == "sin":
        lo, hi = _sin_range(a.lo, a.hi)
        return Iv(lo, hi, False, a.discrete)
    if o == "cos":
        lo, hi = _sin_range(a.lo, a.hi, math.pi / 2)
        return Iv(lo, hi, False, a.discrete)
    if o == "clamp":
        c1, c2 = float(expr.args[1].value), float(expr.args[2].value)
        return Iv(min(max(a.lo, c1), c2), min(max(a.hi, c1), c2), a.integral and ivs[1].integral and ivs[2].integral, a.discrete)
    raise ExpressionError(f"cannot analyse {o!r}")  # pragma: no cover


def _powf(v: float, k: int) -> float:
    try:
        return float(v) ** k
    except OverflowError:
        return math.inf if v > 0 or k % 2 == 0 else -math.inf


# ---------------------------------------------------------------------------
# S-expression text form

_TOKEN = re.compile(r'\s*(?:(\()|(\))|("(?:[^"\\]|\\.)*")|([^\s()"]+))')


def to_sexpr(expr: Expr) -> str:
    o = expr.op
    if o == "x":
        return "x"
    if o == "const":
        v = expr.value
        if isinstance(v, bool):
            return "#t" if v else "#f"
        if isinstance(v, str):
            return json.dumps(v)
        return repr(v)
    if o == "param":
        return f"(param {expr.value})"
    if o == "pow":
        return f"(pow {to_sexpr(expr.args[0])} {expr.value})"
    return "(" + " ".join([o] + [to_sexpr(a) for a in expr.args]) + ")"


def _tokens(text: str) -> list[str]:
    out, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionError(f"bad S-expression near {text[pos:pos + 10]!r}")
        out.append(m.group(m.lastindex))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def _atom(tok: str) -> Expr:
    if tok == "x":
        return X
    if tok == "#t":
        return const(True)
    if tok == "#f":
        return const(False)
    if tok.startswith('"'):
        return const(json.loads(tok))
    try:
        if re.fullmatch(r"[+-]?\d+", tok):
            return const(int(tok))
        return const(float(tok))
    except ValueError:
        raise ExpressionError(f"unknown atom {tok!r}") from None


def from_sexpr(text: str) -> Expr:
    toks = _tokens(text)
    pos = 0

    def parse():
        nonlocal pos
        if pos >= len(toks):
            raise ExpressionError("unexpected end of S-expression")
        tok = toks[pos]
        pos += 1
        if tok == ")":
            raise ExpressionError("unexpected ')'")
        if tok != "(":
            return _atom(tok)
        if pos >= len(toks):
            raise ExpressionError("unexpected end of S-expression")
        name = toks[pos]
        pos += 1
        if name == "param":
            pname = toks[pos]
            pos += 1
            if toks[pos:pos + 1] != [")"]:
                raise ExpressionError("param takes one name")
            pos += 1
            return param(pname)
        if name == "pow":
            base = parse()
            try:
                k = int(toks[pos])
            except (IndexError, ValueError):
                raise ExpressionError("pow needs an integer exponent") from None
            pos += 1
            if toks[pos:pos + 1] != [")"]:
                raise ExpressionError("pow takes two arguments")
            pos += 1
            return Expr("pow", (base,), k)
        args = []
        while pos < len(toks) and toks[pos] != ")":
            args.append(parse())
        if pos >= len(toks):
            raise ExpressionError("missing ')'")
        pos += 1
        return Expr(name, tuple(args))

    out = parse()
    if pos != len(toks):
        raise ExpressionError("trailing tokens after S-expression")
    return out
