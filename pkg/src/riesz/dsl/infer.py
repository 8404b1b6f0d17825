"""Space inference: assigns every measure expression a space descriptor.

Point variables introduced by ``bind`` (and ``fn`` parameters) live in a
:class:`Scope`.  Scalar expressions are compiled to expression trees whose
single argument is the tuple of all variables in scope, nested to the
right with the innermost variable first, so the package's interval
analysis can certify spaces, bounds and continuity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import RieszError
from ..expr import (
    APair,
    Expr,
    Fin,
    Iv,
    X,
    abstract_of_space,
    clamp,
    const,
    enclose,
    fst,
    if_,
    op,
    snd,
    space_of_abstract,
)
from ..functions import ContinuousMap, TestFunction
from ..spaces import (
    FiniteSet,
    IntRange,
    ProductSpace,
    RealInterval,
    RealLine,
    SpaceDescriptor,
    _canonical,
    join_spaces,
)
from .ast import (
    BernoulliE,
    Binary,
    BindE,
    Bool,
    Call,
    CategoricalE,
    Check,
    DiracE,
    Expect,
    FnLit,
    IfM,
    IfS,
    Let,
    MapE,
    MVar,
    Num,
    Pow,
    ProdE,
    Program,
    Str,
    Unary,
    UniformE,
    Var,
    WidenE,
)
from .diagnostics import FrontendError, SpaceError

UNIT_SPACE = FiniteSet(("()",))
ENUMERATION_LIMIT = 4096
WEIGHT_SUM_TOL = 1e-9

# law name -> argument kinds ("m" measure, "f" function literal)
CHECKS = {
    "monad_left": "m",
    "monad_right": "m",
    "associativity": "m",
    "fubini": "mmf",
    "hexagon": "mm",
    "affine": "m",
    "naturality": "fm",
    "equal": "mm",
}


def located(exc: RieszError, span) -> FrontendError:
    """Re-raise a core error as a frontend error keeping its code."""
    if isinstance(exc, FrontendError):
        if exc.span is None:
            exc.span = span
        return exc
    err = SpaceError(str(exc), span)
    err.code = exc.code
    return err


@dataclass(frozen=True)
class Scope:
    """Point variables in scope, innermost first."""

    names: tuple = ()
    spaces: tuple = ()

    def push(self, name: str, space: SpaceDescriptor) -> "Scope":
        return Scope((name, *self.names), (space, *self.spaces))

    def __len__(self):
        return len(self.names)

    @property
    def arg_space(self) -> SpaceDescriptor:
        if not self.names:
            return UNIT_SPACE
        out = self.spaces[-1]
        for s in reversed(self.spaces[:-1]):
            out = ProductSpace(s, out)
        return out

    @property
    def abstract(self):
        return abstract_of_space(self.arg_space)

    def arg_value(self, values: tuple):
        """Nested argument point for a tuple of values, innermost first."""
        if not values:
            return "()"
        out = values[-1]
        for v in reversed(values[:-1]):
            out = (v, out)
        return out

    def access(self, i: int) -> Expr:
        e = X
        for _ in range(i):
            e = snd(e)
        return fst(e) if i < len(self.names) - 1 else e

    def lookup(self, name: str) -> int | None:
        for i, n in enumerate(self.names):
            if n == name:
                return i
        return None

    def enumerable(self) -> bool:
        s = self.arg_space
        return s.is_finite and len(s.points()) <= ENUMERATION_LIMIT


UNARY_CALLS = {"fst": "fst", "snd": "snd", "exp": "exp", "sin": "sin", "cos": "cos", "abs": "abs"}


def _literal_number(e: Expr, span) -> float:
    if e.op == "const" and isinstance(e.value, (int, float)) and not isinstance(e.value, bool):
        return e.value
    if e.op == "neg" and e.args[0].op == "const":
        return -_literal_number(e.args[0], span)
    raise SpaceError("clamp bounds must be numeric literals", span)


def compile_sexpr(e, scope: Scope) -> Expr:
    """Expression tree for a scalar expression over ``scope``'s argument."""
    if isinstance(e, Num):
        return const(e.value)
    if isinstance(e, (Str, Bool)):
        return const(e.value)
    if isinstance(e, Var):
        i = scope.lookup(e.name)
        if i is None:
            raise SpaceError(f"unbound variable {e.name!r}", e.span)
        return scope.access(i)
    if isinstance(e, Unary):
        a = compile_sexpr(e.arg, scope)
        return op("neg" if e.op == "neg" else "not", a)
    if isinstance(e, Binary):
        return op(e.op, compile_sexpr(e.left, scope), compile_sexpr(e.right, scope))
    if isinstance(e, Pow):
        return Expr("pow", (compile_sexpr(e.base, scope),), e.k)
    if isinstance(e, IfS):
        return if_(compile_sexpr(e.cond, scope), compile_sexpr(e.then, scope), compile_sexpr(e.orelse, scope))
    if isinstance(e, Call):
        args = [compile_sexpr(a, scope) for a in e.args]
        if e.name in UNARY_CALLS:
            return op(UNARY_CALLS[e.name], *args)
        if e.name in ("min", "max", "pair"):
            return op(e.name, *args)
        if e.name == "clamp":
            lo, hi = (_literal_number(a, e.span) for a in args[1:])
            if not lo <= hi:
                raise SpaceError("clamp needs lower bound <= upper bound", e.span)
            return clamp(args[0], lo, hi)
    raise SpaceError(f"cannot compile {e!r}", getattr(e, "span", None))


@dataclass
class Judgment:
    """``SpaceJudgment``: node -> space, plus observables and maps."""

    spaces: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    lets: dict = field(default_factory=dict)

    def __getitem__(self, node) -> SpaceDescriptor:
        return self.spaces[id(node)]

    def space_of(self, node) -> SpaceDescriptor:
        return self.spaces[id(node)]

    def record(self, node, space: SpaceDescriptor) -> SpaceDescriptor:
        self.spaces[id(node)] = space
        return space


def _image_space(expr: Expr, scope: Scope, span) -> SpaceDescriptor:
    """Space of an expression's values: exact images when enumerable."""
    try:
        if scope.enumerable():
            return ContinuousMap(expr, scope.arg_space).codomain
        return space_of_abstract(enclose(expr, scope.abstract))
    except RieszError as exc:
        raise located(exc, span) from None


def _condition(expr: Expr, scope: Scope, span):
    try:
        a = enclose(expr, scope.abstract)
    except RieszError as exc:
        raise located(exc, span) from None
    if not (isinstance(a, Fin) and all(isinstance(v, bool) for v in a.values)):
        raise SpaceError("a condition must be boolean", span)
    return a


def categorical_space(items, span) -> SpaceDescriptor:
    lits = [v for v, _ in items]
    if all(isinstance(v, bool) for v in lits):
        return FiniteSet((False, True))
    if all(isinstance(v, int) and not isinstance(v, bool) for v in lits):
        return IntRange(min(lits), max(lits))
    try:
        return FiniteSet(_canonical(lits))
    except RieszError as exc:
        raise located(exc, span) from None


def _numeric(space: SpaceDescriptor) -> bool:
    if isinstance(space, (RealInterval, RealLine, IntRange)):
        return True
    return isinstance(space, FiniteSet) and space.kind == "number"


class Inferencer:
    def __init__(self, judgment: Judgment | None = None, measures: dict | None = None):
        self.j = judgment or Judgment()
        # let-bound names -> spaces
        self.measures = dict(measures or {})

    def mexpr(self, m, scope: Scope) -> SpaceDescriptor:
        return self.j.record(m, self._mexpr(m, scope))

    def _mexpr(self, m, scope: Scope) -> SpaceDescriptor:
        if isinstance(m, DiracE):
            return _image_space(compile_sexpr(m.arg, scope), scope, m.span)
        if isinstance(m, UniformE):
            if not (math.isfinite(m.a) and math.isfinite(m.b) and m.a < m.b):
                raise SpaceError(f"uniform needs a < b, got ({m.a}, {m.b})", m.span)
            return RealInterval(m.a, m.b)
        if isinstance(m, BernoulliE):
            if not 0.0 <= m.p <= 1.0:
                raise SpaceError(f"bernoulli parameter {m.p} outside [0, 1]", m.span)
            return FiniteSet((False, True))
        if isinstance(m, CategoricalE):
            weights = [w for _, w in m.items]
            if any(w < 0 for w in weights):
                raise SpaceError("categorical weights must be non-negative", m.span)
            if abs(math.fsum(weights) - 1.0) > WEIGHT_SUM_TOL:
                raise SpaceError(f"categorical weights sum to {math.fsum(weights)!r}, not 1", m.span)
            lits = [v for v, _ in m.items]
            for i, v in enumerate(lits):
                if any(type(v) is type(w) and v == w for w in lits[:i]):
                    raise SpaceError(f"duplicate categorical literal {v!r}", m.span)
            return categorical_space(m.items, m.span)
        if isinstance(m, BindE):
            source = self.mexpr(m.source, scope)
            return self.mexpr(m.body, scope.push(m.name, source))
        if isinstance(m, MapE):
            domain = self.mexpr(m.measure, scope)
            inner = scope.push(m.fn.param, domain)
            codomain = _image_space(compile_sexpr(m.fn.body, inner), inner, m.fn.span)
            self.j.functions[id(m.fn)] = (domain, codomain)
            return codomain
        if isinstance(m, ProdE):
            return ProductSpace(self.mexpr(m.left, scope), self.mexpr(m.right, scope))
        if isinstance(m, MVar):
            if m.name in self.measures:
                return self.measures[m.name]
            if scope.lookup(m.name) is not None:
                raise SpaceError(f"{m.name!r} is a point, not a measure", m.span)
            raise SpaceError(f"unbound measure {m.name!r}", m.span)
        if isinstance(m, IfM):
            _condition(compile_sexpr(m.cond, scope), scope, m.cond.span)
            a, b = self.mexpr(m.then, scope), self.mexpr(m.orelse, scope)
            try:
                return join_spaces(a, b)
            except RieszError as exc:
                raise located(exc, m.span) from None
        if isinstance(m, WidenE):
            inner = self.mexpr(m.measure, scope)
            if not _numeric(inner):
                raise SpaceError(f"widen needs a numeric space, got {inner}", m.span)
            return RealLine()
        raise SpaceError(f"not a measure expression: {m!r}", getattr(m, "span", None))

    def observable(self, fn: FnLit, domain: SpaceDescriptor) -> TestFunction:
        """Certified bounded observable for ``fn`` on ``domain``."""
        body = compile_sexpr(fn.body, Scope().push(fn.param, domain))
        try:
            f = TestFunction(body, domain)
        except RieszError as exc:
            raise located(exc, fn.span) from None
        self.j.functions[id(fn)] = f
        return f

    def statement(self, s):
        if isinstance(s, Let):
            if s.name in self.measures:
                raise SpaceError(f"{s.name!r} is already defined", s.span)
            space = self.mexpr(s.expr, Scope())
            self.measures[s.name] = space
            self.j.lets[s.name] = space
        elif isinstance(s, Expect):
            self.observable(s.fn, self.mexpr(s.measure, Scope()))
        elif isinstance(s, Check):
            self.check(s)

    def check(self, s: Check):
        kinds = CHECKS.get(s.law)
        if kinds is None:
            raise SpaceError(f"unknown law {s.law!r}; expected one of {', '.join(sorted(CHECKS))}", s.span)
        if len(kinds) != len(s.args) or any((k == "f") != isinstance(a, FnLit) for k, a in zip(kinds, s.args)):
            shape = ", ".join("fn" if k == "f" else "measure" for k in kinds)
            raise SpaceError(f"{s.law} takes ({shape})", s.span)
        spaces = [self.mexpr(a, Scope()) if k == "m" else None for k, a in zip(kinds, s.args)]
        if s.law == "monad_left" and not (isinstance(s.args[0], BindE) and isinstance(s.args[0].source, DiracE)):
            raise SpaceError("monad_left takes a program of the form bind x ~ dirac(v) in B", s.span)
        if s.law == "associativity" and not (isinstance(s.args[0], BindE) and isinstance(s.args[0].source, BindE)):
            raise SpaceError("associativity takes a program of the form bind x ~ (bind y ~ A in B) in C", s.span)
        if s.law == "fubini":
            self.observable(s.args[2], ProductSpace(spaces[0], spaces[1]))
        if s.law == "naturality":
            fn = s.args[0]
            inner = Scope().push(fn.param, spaces[1])
            codomain = _image_space(compile_sexpr(fn.body, inner), inner, fn.span)
            self.j.functions[id(fn)] = (spaces[1], codomain)

    def program(self, p: Program) -> Judgment:
        for s in p.statements:
            self.statement(s)
        return self.j


def infer_spaces(program: Program) -> Judgment:
    """Space judgment for a whole program; raises a located error on failure."""
    return Inferencer().program(program)


__all__ = ["CHECKS", "Inferencer", "Judgment", "Scope", "compile_sexpr", "infer_spaces", "located"]
