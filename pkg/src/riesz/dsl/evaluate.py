"""Denotational evaluation of ``.rpl`` programs into measure trees.

``dirac`` is the unit, ``bind`` builds a :class:`BindNode` whose kernel
re-enters the evaluator at each point, ``map`` is a pushforward and
``prod`` the product.  ``expect`` integrates; ``check`` dispatches into the
law checker.  Every denoted measure lives on exactly the space inference
assigned to its node.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import NotDeterministicMarginal, NotProbability, NotProduct, RieszError
from ..expr import X, evaluate as eval_expr, lift_value, substitute
from ..functions import ContinuousMap
from ..kernels import UnitKernel
from ..laws import LawReport, check_fubini, check_hexagon_instance, check_strongly_affine, compare
from ..measures import (
    BindNode,
    Density,
    Dirac,
    FiniteWeighted,
    IntegrationConfig,
    Kernel,
    Measure,
    ProductNode,
    Pushforward,
    bernoulli,
    integrate_with_error,
    is_finite_tree,
    is_probability,
    measure_from_json,
    measure_to_json,
    register_kernel,
    resolve,
    total_mass,
    tree_depth,
    uniform,
)
from ..spaces import RealLine, SpaceDescriptor, batch_len, batch_tile, space_from_json, value_from_json, value_to_json
from .ast import (
    BernoulliE,
    Binary,
    BindE,
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
    Pow,
    ProdE,
    Program,
    Unary,
    UniformE,
    Var,
    WidenE,
    print_mexpr,
    print_statement,
)
from .diagnostics import FrontendError, diagnostic
from .infer import Inferencer, Judgment, Scope, compile_sexpr, located
from .parser import parse, parse_mexpr

SCHEMA_VERSION = 1


class EvaluationError(FrontendError):
    """A backend or integration failure attributed to a source span."""

    code = "EvaluationError"


def embed(mu: Measure, target: SpaceDescriptor) -> Measure:
    """``mu`` regarded as a measure on the larger space ``target``."""
    if mu.space == target:
        return mu
    if isinstance(mu, Dirac):
        return Dirac(mu.point, target)
    if isinstance(mu, FiniteWeighted):
        return FiniteWeighted(mu.atoms, target)
    if isinstance(mu, Density) and isinstance(target, RealLine):
        return Density(mu.density, mu.normalization, mu.interval, target)
    return Pushforward(ContinuousMap(X, mu.space, target), mu)


class Denoter:
    """Evaluates measure expressions under fixed values of the point variables."""

    def __init__(self, scope: Scope, values: tuple, measures: dict, judgment: Judgment, cache: dict | None = None):
        self.scope = scope
        self.values = values
        self.measures = measures
        self.j = judgment
        # compiled expressions depend only on the scope, so callers sharing one may share this
        self.cache = {} if cache is None else cache

    def compiled(self, e, scope: Scope | None = None):
        scope = scope or self.scope
        key = (id(e), scope.names)
        if key not in self.cache:
            self.cache[key] = (compile_sexpr(e, scope), e)
        return self.cache[key][0]

    def scalar(self, e, space: SpaceDescriptor):
        """Value of a scalar expression at the current point, as a point of ``space``."""
        expr = self.compiled(e)
        arg = self.scope.arg_space
        out = eval_expr(expr, arg.to_batch([self.scope.arg_value(self.values)]))
        return space.from_batch(out)[0]

    def closed(self, fn: FnLit) -> "ContinuousMap":
        domain, codomain = self.j.functions[id(fn)]
        inner = self.scope.push(fn.param, domain)
        body = self.compiled(fn.body, inner)
        if self.values:
            body = substitute(body, _pair(X, lift_value(self.scope.arg_value(self.values))))
        return ContinuousMap(body, domain, codomain)

    def denote(self, m) -> Measure:
        space = self.j[m]
        try:
            out = self._denote(m, space)
        except FrontendError:
            raise
        except RieszError as exc:
            raise located(exc, m.span) from None
        return out

    def _denote(self, m, space):
        if isinstance(m, DiracE):
            return Dirac(self.scalar(m.arg, space), space)
        if isinstance(m, UniformE):
            return uniform(m.a, m.b)
        if isinstance(m, BernoulliE):
            return bernoulli(m.p)
        if isinstance(m, CategoricalE):
            return FiniteWeighted(tuple((v, w) for v, w in m.items), space)
        if isinstance(m, BindE):
            base = self.denote(m.source)
            kernel = DslKernel(m.name, m.body, base.space, self.scope, self.values, self.measures, self.j)
            return BindNode(base, kernel)
        if isinstance(m, MapE):
            return Pushforward(self.closed(m.fn), self.denote(m.measure))
        if isinstance(m, ProdE):
            return ProductNode(self.denote(m.left), self.denote(m.right))
        if isinstance(m, MVar):
            return self.measures[m.name]
        if isinstance(m, IfM):
            branch = m.then if self.scalar(m.cond, _BOOLS) else m.orelse
            return embed(self.denote(branch), space)
        if isinstance(m, WidenE):
            return embed(self.denote(m.measure), space)
        raise EvaluationError(f"cannot evaluate {m!r}", getattr(m, "span", None))


def _pair(a, b):
    from ..expr import pair

    return pair(a, b)


from ..spaces import FiniteSet  # noqa: E402

_BOOLS = FiniteSet((False, True))


def _free_in(m, name: str) -> bool:
    """Whether the point variable ``name`` occurs free in a measure expression."""
    if isinstance(m, DiracE):
        return _free_scalar(m.arg, name)
    if isinstance(m, BindE):
        return _free_in(m.source, name) or (m.name != name and _free_in(m.body, name))
    if isinstance(m, MapE):
        return _free_in(m.measure, name) or (m.fn.param != name and _free_scalar(m.fn.body, name))
    if isinstance(m, ProdE):
        return _free_in(m.left, name) or _free_in(m.right, name)
    if isinstance(m, IfM):
        return _free_scalar(m.cond, name) or _free_in(m.then, name) or _free_in(m.orelse, name)
    if isinstance(m, WidenE):
        return _free_in(m.measure, name)
    return False


def _free_scalar(e, name: str) -> bool:
    if isinstance(e, Var):
        return e.name == name
    return any(_free_scalar(c, name) for c in _scalar_children(e))


def _scalar_children(e):
    if isinstance(e, Unary):
        return (e.arg,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, Call):
        return e.args
    if isinstance(e, IfS):
        return (e.cond, e.then, e.orelse)
    return ()


def _finite_body(m, measures: dict) -> bool:
    if isinstance(m, UniformE):
        return False
    if isinstance(m, MVar):
        return is_finite_tree(measures[m.name])
    return all(_finite_body(c, measures) for c in _measure_children(m))


def _probability_body(m, measures: dict) -> bool:
    if isinstance(m, MVar):
        return is_probability(measures[m.name])
    return all(_probability_body(c, measures) for c in _measure_children(m))


def _measure_children(m):
    if isinstance(m, BindE):
        return (m.source, m.body)
    if isinstance(m, MapE):
        return (m.measure,)
    if isinstance(m, ProdE):
        return (m.left, m.right)
    if isinstance(m, IfM):
        return (m.then, m.orelse)
    if isinstance(m, WidenE):
        return (m.measure,)
    return ()


def _measure_names(m) -> set:
    if isinstance(m, MVar):
        return {m.name}
    out = set()
    for c in _measure_children(m):
        out |= _measure_names(c)
    return out


class DslKernel(Kernel):
    """``x -> [[body]]`` with ``x`` bound to ``var`` over the enclosing scope."""

    tag = "dsl"

    def __init__(self, var: str, body, domain: SpaceDescriptor, scope: Scope, values: tuple, measures: dict, judgment: Judgment):
        self.var = var
        self.body = body
        self.domain = domain
        self.outer = scope
        self.values = tuple(values)
        self.measures = {k: measures[k] for k in _measure_names(body)}
        self.scope = scope.push(var, domain)
        self.j = judgment
        self.codomain = judgment[body]
        self._cache: dict = {}
        self._constant = not _free_in(body, var)

    def __eq__(self, other):
        return (
            isinstance(other, DslKernel)
            and (self.var, self.body, self.domain, self.outer, self.values) == (other.var, other.body, other.domain, other.outer, other.values)
            and self.measures == other.measures
        )

    __hash__ = None

    def rule(self, x):
        return Denoter(self.scope, (x, *self.values), self.measures, self.j, self._cache).denote(self.body)

    def integrate_points(self, xs, space, h, k, integrate):
        n = batch_len(xs)
        if self._constant:
            # the body does not mention the bound variable
            return np.tile(integrate(self.rule(space.from_batch(xs)[0]), h, k), (n, 1))
        if isinstance(self.body, DiracE):
            # k(x) = delta_{e(x)} for the whole batch at once
            expr = Denoter(self.scope, (), self.measures, self.j, self._cache).compiled(self.body.arg)
            if self.values:
                rest = self.outer.arg_space.to_batch([self.outer.arg_value(self.values)])
                batch = (xs, batch_tile(rest, n))
            else:
                batch = xs
            return np.asarray(h(eval_expr(expr, batch)), dtype=float).reshape(n, k)
        return super().integrate_points(xs, space, h, k, integrate)

    def nonnegative(self):
        return _probability_body(self.body, self.measures)

    def probability(self):
        return _probability_body(self.body, self.measures)

    def variation_bound(self):
        return 1.0 if self.probability() else float("inf")

    def is_finite(self):
        return _finite_body(self.body, self.measures)

    def to_json(self):
        return {
            "tag": self.tag,
            "var": self.var,
            "body": print_mexpr(self.body),
            "domain": self.domain.to_json(),
            "scope": [
                [n, s.to_json(), value_to_json(v)] for n, s, v in zip(self.outer.names, self.outer.spaces, self.values)
            ],
            "measures": {k: measure_to_json(v) for k, v in sorted(self.measures.items())},
        }


@register_kernel("dsl")
def _dsl_kernel(obj):
    scope = Scope()
    values = []
    for n, s, v in reversed(obj["scope"]):
        space = space_from_json(s)
        scope = scope.push(n, space)
        values.insert(0, value_from_json(v, space))
    measures = {k: measure_from_json(v) for k, v in obj["measures"].items()}
    domain = space_from_json(obj["domain"])
    body = parse_mexpr(obj["body"])
    inf = Inferencer(measures={k: m.space for k, m in measures.items()})
    inf.mexpr(body, scope.push(obj["var"], domain))
    return DslKernel(obj["var"], body, domain, scope, tuple(values), measures, inf.j)


# ---------------------------------------------------------------------------
# source-level rewriting used by the law checks


def subst(m, name: str, e):
    """``m[e/name]`` for a closed scalar expression ``e``."""
    if isinstance(m, DiracE):
        return replace(m, arg=subst_scalar(m.arg, name, e))
    if isinstance(m, BindE):
        body = m.body if m.name == name else subst(m.body, name, e)
        return replace(m, source=subst(m.source, name, e), body=body)
    if isinstance(m, MapE):
        fn = m.fn if m.fn.param == name else replace(m.fn, body=subst_scalar(m.fn.body, name, e))
        return replace(m, fn=fn, measure=subst(m.measure, name, e))
    if isinstance(m, ProdE):
        return replace(m, left=subst(m.left, name, e), right=subst(m.right, name, e))
    if isinstance(m, IfM):
        return replace(m, cond=subst_scalar(m.cond, name, e), then=subst(m.then, name, e), orelse=subst(m.orelse, name, e))
    if isinstance(m, WidenE):
        return replace(m, measure=subst(m.measure, name, e))
    return m


def subst_scalar(s, name: str, e):
    if isinstance(s, Var):
        return e if s.name == name else s
    if isinstance(s, Unary):
        return replace(s, arg=subst_scalar(s.arg, name, e))
    if isinstance(s, Binary):
        return replace(s, left=subst_scalar(s.left, name, e), right=subst_scalar(s.right, name, e))
    if isinstance(s, Pow):
        return replace(s, base=subst_scalar(s.base, name, e))
    if isinstance(s, Call):
        return replace(s, args=tuple(subst_scalar(a, name, e) for a in s.args))
    if isinstance(s, IfS):
        return replace(s, cond=subst_scalar(s.cond, name, e), then=subst_scalar(s.then, name, e), orelse=subst_scalar(s.orelse, name, e))
    return s


def fresh(*nodes) -> str:
    text = " ".join(print_mexpr(n) if not isinstance(n, FnLit) else n.param + str(n.body) for n in nodes)
    i = 0
    while f"v{i}" in text:
        i += 1
    return f"v{i}_"


# ---------------------------------------------------------------------------
# results


@dataclass
class ExpectResult:
    source: str
    value: float
    stderr: float
    backend: str
    seed: int
    span: object = None

    def to_json(self) -> dict:
        return {
            "kind": "expect",
            "source": self.source,
            "value": self.value,
            "stderr": self.stderr,
            "backend": self.backend,
            "seed": self.seed,
            "span": self.span.to_json() if self.span else None,
        }


@dataclass
class CheckResult:
    source: str
    report: LawReport | None
    rejected: dict | None = None
    span: object = None

    @property
    def verdict(self) -> str:
        return "rejected" if self.rejected else self.report.verdict

    @property
    def failed(self) -> bool:
        return self.report is not None and self.report.failed

    def to_json(self) -> dict:
        return {
            "kind": "check",
            "source": self.source,
            "verdict": self.verdict,
            "report": self.report.to_json() if self.report else None,
            "precondition": self.rejected,
            "span": self.span.to_json() if self.span else None,
        }


@dataclass
class MeasureSummary:
    name: str
    space: SpaceDescriptor
    mass: float
    depth: int

    def to_json(self) -> dict:
        return {"name": self.name, "space": self.space.to_json(), "mass": self.mass, "depth": self.depth}


@dataclass
class Evaluation:
    measures: dict = field(default_factory=dict)
    summaries: list = field(default_factory=list)
    results: list = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return any(isinstance(r, CheckResult) and r.failed for r in self.results)

    def to_json(self) -> dict:
        return {
            "measures": [s.to_json() for s in self.summaries],
            "results": [r.to_json() for r in self.results],
        }


class Evaluator:
    def __init__(self, judgment: Judgment, cfg: IntegrationConfig | None = None):
        self.j = judgment
        self.cfg = cfg or IntegrationConfig()
        self.out = Evaluation()

    def denote(self, m) -> Measure:
        return Denoter(Scope(), (), self.out.measures, self.j).denote(m)

    def _closed(self, m) -> Measure:
        """Infer and denote a tree built by rewriting."""
        Inferencer(self.j, {k: v.space for k, v in self.out.measures.items()}).mexpr(m, Scope())
        return self.denote(m)

    def _integrate(self, mu, f, span):
        try:
            cfg = resolve(mu, self.cfg)
            value, err = integrate_with_error(mu, f, cfg)
        except RieszError as exc:
            raise _runtime(exc, span) from None
        return value, err, cfg

    def statement(self, s):
        if isinstance(s, Let):
            mu = self.denote(s.expr)
            self.out.measures[s.name] = mu
            try:
                mass = total_mass(mu, resolve(mu, self.cfg))
            except RieszError as exc:
                raise _runtime(exc, s.span) from None
            self.out.summaries.append(MeasureSummary(s.name, mu.space, mass, tree_depth(mu)))
        elif isinstance(s, Expect):
            mu = self.denote(s.measure)
            value, err, cfg = self._integrate(mu, self.j.functions[id(s.fn)], s.span)
            self.out.results.append(ExpectResult(print_statement(s), value, err, cfg.label(), cfg.seed, s.span))
        elif isinstance(s, Check):
            self.out.results.append(self.check(s))

    def check(self, s: Check) -> CheckResult:
        src = print_statement(s)
        law, args = s.law, s.args
        try:
            if law == "monad_left":
                b = args[0]
                rep = compare(law, self.denote(b), self._closed(subst(b.body, b.name, b.source.arg)), self.cfg)
            elif law == "monad_right":
                v = fresh(args[0])
                rhs = BindE(v, args[0], DiracE(Var(v)))
                rep = compare(law, self._closed(rhs), self.denote(args[0]), self.cfg)
            elif law == "associativity":
                outer, inner = args[0], args[0].source
                z = fresh(outer)
                renamed = subst(inner.body, inner.name, Var(z))
                rhs = BindE(z, inner.source, BindE(outer.name, renamed, outer.body))
                rep = compare(law, self.denote(outer), self._closed(rhs), self.cfg)
            elif law == "fubini":
                rep = check_fubini(self.denote(args[0]), self.denote(args[1]), self.j.functions[id(args[2])], self.cfg)
            elif law == "hexagon":
                rep = check_hexagon_instance(self.denote(args[0]), self.denote(args[1]), self.cfg)
            elif law == "affine":
                try:
                    rep = check_strongly_affine(self.denote(args[0]), self.cfg)
                except (NotDeterministicMarginal, NotProbability, NotProduct) as exc:
                    return CheckResult(src, None, exc.to_json(), s.span)
            elif law == "naturality":
                fn, m = args
                v = fresh(fn, m)
                lhs = MapE(fn, m)
                rhs = BindE(v, m, DiracE(subst_scalar(fn.body, fn.param, Var(v))))
                rep = compare(law, self._closed(lhs), self._closed(rhs), self.cfg)
            else:  # equal
                rep = compare(law, self.denote(args[0]), self.denote(args[1]), self.cfg)
        except FrontendError:
            raise
        except RieszError as exc:
            raise _runtime(exc, s.span) from None
        return CheckResult(src, rep, None, s.span)


def _runtime(exc: RieszError, span) -> EvaluationError:
    err = EvaluationError(str(exc), span)
    err.code = exc.code
    return err


def evaluate(program: Program, cfg: IntegrationConfig | None = None, judgment: Judgment | None = None) -> Evaluation:
    """Evaluate an inferred program; ``judgment`` defaults to a fresh inference."""
    from .infer import infer_spaces

    j = judgment or infer_spaces(program)
    ev = Evaluator(j, cfg)
    for s in program.statements:
        ev.statement(s)
    return ev.out


@dataclass
class RunReport:
    """Outcome of running a program: diagnostics or an evaluation."""

    evaluation: Evaluation | None
    diagnostics: list
    stage: str
    cfg: IntegrationConfig

    @property
    def exit_code(self) -> int:
        if self.diagnostics:
            return 3 if self.stage == "evaluate" else 2
        return 1 if self.evaluation.failed else 0

    def to_json(self) -> dict:
        out = {"schema_version": SCHEMA_VERSION, "config": self.cfg.to_json(), "exit_code": self.exit_code}
        if self.diagnostics:
            out["stage"] = self.stage
            out["diagnostics"] = self.diagnostics
        else:
            out.update(self.evaluation.to_json())
        return out


def run_source(text: str, cfg: IntegrationConfig | None = None) -> RunReport:
    """Parse, infer and evaluate ``text``, collecting diagnostics per stage."""
    from .infer import infer_spaces

    cfg = cfg or IntegrationConfig()
    stage = "parse"
    try:
        program = parse(text)
        stage = "infer"
        j = infer_spaces(program)
        stage = "evaluate"
        ev = evaluate(program, cfg, j)
    except FrontendError as exc:
        return RunReport(None, [exc.to_json()], stage, cfg)
    except RieszError as exc:
        return RunReport(None, [diagnostic(exc.code, None, str(exc))], stage, cfg)
    return RunReport(ev, [], "done", cfg)


__all__ = [
    "CheckResult",
    "DslKernel",
    "Evaluation",
    "EvaluationError",
    "ExpectResult",
    "RunReport",
    "SCHEMA_VERSION",
    "evaluate",
    "run_source",
]
