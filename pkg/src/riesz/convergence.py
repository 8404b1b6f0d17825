"""Numerical harnesses for convergence of observables and of measures.

Three modes:

* ``compact_uniform``: sup of ``|f_n - f|`` over uniform grids on a list of
  user-supplied compact intervals, plus a uniform-bound certificate;
* ``weak``: battery distance between ``mu_n`` and ``mu``;
* ``strengthened_cmt``: battery distance between ``(g_n)_* mu_n`` and
  ``g_* mu``, with both sequences moving at once.

The verdict passes when the residual at the top index is at most ``tol``
and residuals do not increase over the last half of the indices.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .battery import BATTERY_VERSION, battery, battery_distance
from .errors import DomainMismatch, ExpressionError
from .expr import Expr, X, bind_params, clamp, const, from_sexpr, param, sin, to_sexpr
from .functions import ContinuousMap, TestFunction
from .measures import (
    Density,
    Dirac,
    IntegrationConfig,
    Measure,
    Pushforward,
    is_probability,
    measure_from_json,
    uniform,
)
from .spaces import RealInterval, RealLine, SpaceDescriptor, join_spaces, space_from_json

DEFAULT_GRID = 2048
MONOTONE_SLACK = 1e-12


# ---------------------------------------------------------------------------
# sequences


@dataclass(frozen=True)
class FunctionSequence:
    """``n -> f_n`` as a callable or as a template body containing ``(param n)``."""

    generator: Callable[[int], TestFunction] | None = None
    uniform_bound: float = math.inf
    template: Expr | None = None
    domain: SpaceDescriptor | None = None

    def __call__(self, n: int) -> TestFunction:
        if self.template is not None:
            return TestFunction(bind_params(self.template, {"n": float(n)}), self.domain)
        return self.generator(n)

    def to_json(self) -> dict:
        if self.template is None:
            raise ExpressionError("only template sequences serialize")
        return {"template": to_sexpr(self.template), "domain": self.domain.to_json(), "uniform_bound": self.uniform_bound}

    @classmethod
    def from_json(cls, obj) -> "FunctionSequence":
        return cls(None, float(obj.get("uniform_bound", math.inf)), from_sexpr(obj["template"]), space_from_json(obj["domain"]))


@dataclass(frozen=True)
class MapSequence:
    """``n -> g_n`` as a callable or a template body containing ``(param n)``."""

    generator: Callable[[int], ContinuousMap] | None = None
    template: Expr | None = None
    domain: SpaceDescriptor | None = None
    codomain: SpaceDescriptor | None = None

    def __call__(self, n: int) -> ContinuousMap:
        if self.template is not None:
            return ContinuousMap(bind_params(self.template, {"n": float(n)}), self.domain, self.codomain)
        return self.generator(n)

    @classmethod
    def constant(cls, g: ContinuousMap) -> "MapSequence":
        return cls(lambda n: g)

    @classmethod
    def from_json(cls, obj) -> "MapSequence":
        cod = obj.get("codomain")
        return cls(None, from_sexpr(obj["template"]), space_from_json(obj["domain"]), space_from_json(cod) if cod else None)


@dataclass(frozen=True)
class MeasureSequence:
    """``n -> mu_n``; every term must be a certified probability."""

    generator: Callable[[int], Measure]
    name: str = ""

    def __call__(self, n: int) -> Measure:
        mu = self.generator(n)
        if not is_probability(mu):
            raise DomainMismatch(f"term {n} of {self.name or 'sequence'} is not a probability measure")
        return mu

    @classmethod
    def constant(cls, mu: Measure) -> "MeasureSequence":
        return cls(lambda n: mu, "constant")

    @classmethod
    def from_terms(cls, terms: dict[int, Measure]) -> "MeasureSequence":
        return cls(lambda n: terms[n], "terms")


# ---------------------------------------------------------------------------
# reports


@dataclass
class ConvergenceReport:
    mode: str
    indices: list
    sup_residuals: list
    tolerance: float
    decreasing: bool = False
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    @property
    def passed(self) -> bool:
        if not self.indices:
            return True
        ok = self.sup_residuals[-1] <= self.tolerance and self.decreasing
        return ok and self.details.get("bound_certified", True)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "verdict": self.verdict,
            "indices": list(self.indices),
            "sup_residuals": list(self.sup_residuals),
            "decreasing": self.decreasing,
            "tolerance": self.tolerance,
            "details": self.details,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "residual"])
        for n, r in zip(self.indices, self.sup_residuals):
            w.writerow([n, repr(float(r))])
        return buf.getvalue()


def monotone_tail(residuals: Sequence[float], slack: float = MONOTONE_SLACK) -> bool:
    """Non-increasing over the last half of the list."""
    tail = list(residuals)[len(residuals) // 2 :]
    return all(b <= a + slack for a, b in zip(tail, tail[1:]))


def _map_indices(fn, indices, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, indices))
    return [fn(n) for n in indices]


def _finish(mode, indices, residuals, tol, details) -> ConvergenceReport:
    return ConvergenceReport(mode, list(indices), [float(r) for r in residuals], float(tol), monotone_tail(residuals), details)


# ---------------------------------------------------------------------------
# checks


def compact_uniform_check(
    fs: FunctionSequence,
    limit: TestFunction,
    compacts: Sequence[RealInterval],
    grid: int = DEFAULT_GRID,
    indices: Sequence[int] = range(1, 65),
    tol: float = 1e-2,
    threads: int = 1,
) -> ConvergenceReport:
    """``sup |f_n - f|`` on uniform grids (endpoints included) of each compact."""
    indices = list(indices)
    for K in compacts:
        if not K.is_subspace_of(limit.domain):
            raise DomainMismatch(f"compact {K} is not inside {limit.domain}")
    points = np.concatenate([np.linspace(K.a, K.b, grid) for K in compacts]) if compacts else np.zeros(0)
    target = limit.values(points) if len(points) else points

    def one(n):
        f = fs(n)
        for K in compacts:
            if not K.is_subspace_of(f.domain):
                raise DomainMismatch(f"compact {K} is not inside the domain {f.domain} of term {n}")
        res = float(np.max(np.abs(f.values(points) - target))) if len(points) else 0.0
        return res, f.bound

    out = _map_indices(one, indices, threads)
    bounds = [b for _, b in out]
    details = {
        "grid": grid,
        "compacts": [[K.a, K.b] for K in compacts],
        "uniform_bound": _num(fs.uniform_bound),
        "term_bounds": bounds,
        "bound_certified": all(b <= fs.uniform_bound for b in bounds),
    }
    return _finish("compact_uniform", indices, [r for r, _ in out], tol, details)


def weak_convergence_check(
    ms: MeasureSequence,
    limit: Measure,
    indices: Sequence[int] = range(1, 65),
    cfg: IntegrationConfig | None = None,
    tol: float | None = None,
    threads: int = 1,
) -> ConvergenceReport:
    """Battery distance between ``mu_n`` and ``mu`` at each index."""
    cfg = cfg or IntegrationConfig()
    indices = list(indices)
    if not isinstance(limit.space, (RealInterval, RealLine)):
        raise DomainMismatch("weak convergence is checked on intervals and the real line")
    dists = _map_indices(lambda n: battery_distance(ms(n), limit, cfg), indices, threads)
    return _finish("weak", indices, [d.value for d in dists], _tol(tol, cfg), _details(limit.space, dists, cfg))


def strengthened_cmt_check(
    gs: MapSequence,
    g: ContinuousMap,
    ms: MeasureSequence,
    mu: Measure,
    indices: Sequence[int] = range(1, 65),
    cfg: IntegrationConfig | None = None,
    tol: float | None = None,
    threads: int = 1,
) -> ConvergenceReport:
    """Battery distance between ``(g_n)_* mu_n`` and ``g_* mu``."""
    cfg = cfg or IntegrationConfig()
    indices = list(indices)
    target = Pushforward(g, mu)

    def one(n):
        gn = gs(n)
        if gn.domain != g.domain:
            raise DomainMismatch(f"map {n} is defined on {gn.domain}, the limit map on {g.domain}")
        return battery_distance(Pushforward(gn, ms(n)), target, cfg)

    dists = _map_indices(one, indices, threads)
    space = join_spaces(g.codomain, gs(indices[0]).codomain) if indices else g.codomain
    return _finish("strengthened_cmt", indices, [d.value for d in dists], _tol(tol, cfg), _details(space, dists, cfg))


def _tol(tol, cfg):
    return tol if tol is not None else cfg.tolerance


def _num(v):
    return v if math.isfinite(v) else str(v)


def _details(space, dists, cfg) -> dict:
    bat = battery(space)
    return {
        "space": space.to_json(),
        "battery_version": BATTERY_VERSION,
        "battery_size": len(bat),
        "lipschitz": _num(bat.lipschitz),
        "worst_functions": [d.function for d in dists],
        "backend": cfg.label(),
        "seed": cfg.seed,
    }


# ---------------------------------------------------------------------------
# built-in families


@dataclass(frozen=True)
class Family:
    """A named sequence with a certified residual envelope ``n -> bound``."""

    name: str
    mode: str
    description: str
    run: Callable
    envelope: Callable[[float, int], float]

    def check(self, indices: Sequence[int], cfg: IntegrationConfig | None = None, tol: float | None = None, threads: int = 1) -> ConvergenceReport:
        cfg = cfg or IntegrationConfig()
        indices = list(indices)
        rep = self.run(indices, cfg, threads)
        L = rep.details.get("lipschitz", 0.0)
        L = L if isinstance(L, float) else math.inf
        env = [self.envelope(L, n) for n in indices]
        if tol is None:
            # the certified envelope at the top index, floored at the backend tolerance
            tol = max(env[-1], cfg.tolerance) if indices else cfg.tolerance
        rep.tolerance = float(tol)
        rep.details["family"] = self.name
        rep.details["envelope"] = env
        rep.details["within_envelope"] = all(r <= e + cfg.tolerance for r, e in zip(rep.sup_residuals, env))
        return rep


_UNIT = RealInterval(0.0, 1.0)


def _dirac_shrink(indices, cfg, threads):
    ms = MeasureSequence(lambda n: Dirac(1.0 / n, _UNIT), "dirac_shrink")
    return weak_convergence_check(ms, Dirac(0.0, _UNIT), indices, cfg, threads=threads)


def _dirac_shrink_line(indices, cfg, threads):
    line = RealLine()
    ms = MeasureSequence(lambda n: Dirac(1.0 / n, line), "dirac_shrink_line")
    return weak_convergence_check(ms, Dirac(0.0, line), indices, cfg, threads=threads)


def _uniform_shrink(indices, cfg, threads):
    ms = MeasureSequence(lambda n: uniform(0.0, 1.0 / n, _UNIT), "uniform_shrink")
    return weak_convergence_check(ms, Dirac(0.0, _UNIT), indices, cfg, threads=threads)


def _constant_measure() -> Measure:
    return Density(TestFunction(1.0 + 0.5 * sin(3.0 * X), _UNIT), 1.0 / (1.0 + (1.0 - math.cos(3.0)) / 6.0), _UNIT)


def _constant(indices, cfg, threads):
    mu = _constant_measure()
    return weak_convergence_check(MeasureSequence.constant(mu), mu, indices, cfg, threads=threads)


_SHIFT_CODOMAIN = RealInterval(0.0, 2.0)


def _cmt_shift(indices, cfg, threads):
    gs = MapSequence(None, X + const(1.0) / param("n"), _UNIT, _SHIFT_CODOMAIN)
    g = ContinuousMap(X, _UNIT, _SHIFT_CODOMAIN)
    ms = MeasureSequence(lambda n: Dirac(1.0 / n, _UNIT), "dirac_shrink")
    return strengthened_cmt_check(gs, g, ms, Dirac(0.0, _UNIT), indices, cfg, threads=threads)


def _cmt_square(indices, cfg, threads):
    g = ContinuousMap(X * X, _UNIT, _UNIT)
    ms = MeasureSequence(lambda n: uniform(0.0, 1.0 / n, _UNIT), "uniform_shrink")
    return strengthened_cmt_check(MapSequence.constant(g), g, ms, Dirac(0.0, _UNIT), indices, cfg, threads=threads)


def _cmt_constant(indices, cfg, threads):
    g = ContinuousMap(X * X, _UNIT, _UNIT)
    mu = _constant_measure()
    return strengthened_cmt_check(MapSequence.constant(g), g, MeasureSequence.constant(mu), mu, indices, cfg, threads=threads)


def _fn_linear(indices, cfg, threads):
    fs = FunctionSequence(None, 1.0, X / param("n"), _UNIT)
    return compact_uniform_check(fs, TestFunction(const(0.0), _UNIT), [_UNIT], DEFAULT_GRID, indices, threads=threads)


def _fn_power(indices, cfg, threads):
    fs = FunctionSequence(lambda n: TestFunction(clamp(Expr("pow", (X,), n), 0.0, 1.0), _UNIT), 1.0)
    return compact_uniform_check(fs, TestFunction(const(0.0), _UNIT), [RealInterval(0.0, 0.9)], DEFAULT_GRID, indices, threads=threads)


_TEN = RealInterval(0.0, 10.0)


def _fn_sin_shift(indices, cfg, threads):
    fs = FunctionSequence(None, 1.0, sin(X + const(1.0) / param("n")), _TEN)
    return compact_uniform_check(fs, TestFunction(sin(X), _TEN), [_TEN], DEFAULT_GRID, indices, threads=threads)


FAMILIES = {
    f.name: f
    for f in [
        Family("dirac_shrink", "weak", "delta_{1/n} -> delta_0 on [0, 1]", _dirac_shrink, lambda L, n: L / n),
        Family("dirac_shrink_line", "weak", "delta_{1/n} -> delta_0 on the real line", _dirac_shrink_line, lambda L, n: L / n),
        Family("uniform_shrink", "weak", "Uniform(0, 1/n) -> delta_0 on [0, 1]", _uniform_shrink, lambda L, n: L / (2 * n)),
        Family("constant", "weak", "constant sequence mu_n = mu", _constant, lambda L, n: 0.0),
        Family("cmt_shift", "strengthened_cmt", "(x -> x + 1/n)_* delta_{1/n} -> delta_0", _cmt_shift, lambda L, n: 2 * L / n),
        Family("cmt_square", "strengthened_cmt", "(x -> x^2)_* Uniform(0, 1/n) -> delta_0", _cmt_square, lambda L, n: L / (3 * n * n)),
        Family("cmt_constant", "strengthened_cmt", "g_n = g and mu_n = mu fixed", _cmt_constant, lambda L, n: 0.0),
        Family("fn_linear", "compact_uniform", "x/n -> 0 on [0, 1]", _fn_linear, lambda L, n: 1.0 / n),
        Family("fn_power", "compact_uniform", "clamp(x^n, 0, 1) -> 0 on [0, 0.9]", _fn_power, lambda L, n: 0.9**n),
        Family("fn_sin_shift", "compact_uniform", "sin(x + 1/n) -> sin(x) on [0, 10]", _fn_sin_shift, lambda L, n: 1.0 / n),
    ]
}


# ---------------------------------------------------------------------------
# JSON specs


def run_spec(spec: dict, indices: Sequence[int] | None = None, cfg: IntegrationConfig | None = None, tol: float | None = None, threads: int = 1) -> ConvergenceReport:
    """Run a convergence spec: a built-in family or serialized sequences.

    ``{"family": name}`` selects a built-in family.  Otherwise ``mode``
    picks the harness; ``weak`` takes ``terms`` (``[{"n": .., "measure": ..}]``)
    and ``limit``; ``compact_uniform`` takes a ``template`` body with
    ``(param n)``, ``domain``, ``limit`` body, ``compacts`` and
    ``uniform_bound``; ``strengthened_cmt`` takes ``maps`` (a template map),
    ``limit_map``, ``terms`` and ``limit``.
    """
    cfg = cfg or IntegrationConfig()
    if tol is None and spec.get("tol") is not None:
        tol = float(spec["tol"])
    if "family" in spec:
        name = spec["family"]
        if name not in FAMILIES:
            raise KeyError(f"unknown family {name!r}; known: {', '.join(sorted(FAMILIES))}")
        idx = list(indices) if indices is not None else parse_indices(spec.get("indices", "1..64"))
        return FAMILIES[name].check(idx, cfg, tol, threads)
    mode = spec["mode"]
    if mode == "compact_uniform":
        fs = FunctionSequence.from_json(spec)
        limit = TestFunction(from_sexpr(spec["limit"]), fs.domain)
        compacts = [RealInterval(a, b) for a, b in spec["compacts"]]
        idx = list(indices) if indices is not None else parse_indices(spec.get("indices", "1..64"))
        return compact_uniform_check(fs, limit, compacts, int(spec.get("grid", DEFAULT_GRID)), idx, 1e-2 if tol is None else tol, threads)
    terms = {int(t["n"]): measure_from_json(t["measure"]) for t in spec["terms"]}
    idx = list(indices) if indices is not None else sorted(terms)
    missing = [n for n in idx if n not in terms]
    if missing:
        raise KeyError(f"no terms for indices {missing[:5]}")
    limit = measure_from_json(spec["limit"])
    ms = MeasureSequence.from_terms(terms)
    if mode == "weak":
        return weak_convergence_check(ms, limit, idx, cfg, tol, threads)
    if mode == "strengthened_cmt":
        gs = MapSequence.from_json(spec["maps"])
        g = ContinuousMap.from_json(spec["limit_map"])
        return strengthened_cmt_check(gs, g, ms, limit, idx, cfg, tol, threads)
    raise KeyError(f"unknown mode {mode!r}")


def parse_indices(text) -> list[int]:
    """``"a..b"`` (inclusive), ``"a,b,c"`` or a JSON list."""
    if isinstance(text, list):
        return [int(v) for v in text]
    text = str(text).strip()
    if ".." in text:
        a, _, b = text.partition("..")
        lo, hi = int(a), int(b)
        if lo < 1 or hi < lo:
            raise ValueError(f"bad index range {text!r}")
        return list(range(lo, hi + 1))
    out = [int(v) for v in text.split(",") if v.strip()]
    if any(n < 1 for n in out):
        raise ValueError("indices start at 1")
    return out


__all__ = [
    "ConvergenceReport",
    "FAMILIES",
    "Family",
    "FunctionSequence",
    "MapSequence",
    "MeasureSequence",
    "compact_uniform_check",
    "monotone_tail",
    "parse_indices",
    "run_spec",
    "strengthened_cmt_check",
    "weak_convergence_check",
]
