"""Bounded continuous observables and continuous maps between spaces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainMismatch, ExpressionError, NonFinite, UnboundedFunction
from .expr import (
    APair,
    Expr,
    X,
    abstract_of_space,
    as_expr,
    enclose,
    evaluate,
    free_params,
    from_sexpr,
    lift_value,
    space_of_abstract,
    substitute,
    to_sexpr,
)
from .spaces import (
    FiniteSet,
    IntRange,
    ProductSpace,
    RealInterval,
    SpaceDescriptor,
    is_real,
    space_from_json,
)

SPOT_CHECK_POINTS = 257


def _check_finite(vals):
    if isinstance(vals, tuple):
        for v in vals:
            _check_finite(v)
        return
    if vals.dtype.kind == "f" and not np.all(np.isfinite(vals)):
        raise NonFinite("expression produced a non-finite value")


def spot_points(space: SpaceDescriptor, n: int = SPOT_CHECK_POINTS, seed: int = 0) -> list:
    """Deterministic sample of points of ``space`` (all points when finite)."""
    if space.is_finite:
        return space.points()
    if isinstance(space, ProductSpace):
        m = max(2, int(math.sqrt(n)))
        left, right = spot_points(space.left, m, seed), spot_points(space.right, m, seed + 1)
        return [(x, y) for x in left for y in right]
    rng = np.random.default_rng(seed)
    if isinstance(space, RealInterval):
        grid = np.linspace(space.a, space.b, n // 2)
        rand = rng.uniform(space.a, space.b, n - n // 2)
    else:
        grid = np.linspace(-50.0, 50.0, n // 2)
        rand = rng.standard_cauchy(n - n // 2) * 10.0
    return [float(v) for v in np.concatenate([grid, rand])]


@dataclass(frozen=True)
class TestFunction:
    """Bounded real-valued expression on a space with a certified sup-norm bound.

    Without ``declared_bound`` the bound comes from interval analysis of the
    body; building an observable whose enclosure is unbounded raises
    ``UnboundedFunction``.  A declared bound below the analysed one is
    accepted only after a check: exact enumeration on finite domains, a
    deterministic spot check elsewhere.
    """

    __test__ = False  # not a pytest class

    body: Expr
    domain: SpaceDescriptor
    declared_bound: float | None = None
    trusted: bool = field(default=False, compare=False, repr=False)

    def __post_init__(self):
        body = as_expr(self.body)
        object.__setattr__(self, "body", body)
        if free_params(body):
            raise ExpressionError(f"unbound parameters {sorted(free_params(body))}")
        if self.trusted and self.declared_bound is not None:
            object.__setattr__(self, "declared_bound", float(self.declared_bound))
            return
        enc = enclose(body, abstract_of_space(self.domain))
        if isinstance(enc, APair) or not hasattr(enc, "lo"):
            raise ExpressionError("a test function must be real-valued")
        inferred = max(abs(enc.lo), abs(enc.hi))
        if self.declared_bound is None:
            if not math.isfinite(inferred):
                raise UnboundedFunction(f"no certified bound for {to_sexpr(body)} on {self.domain}")
            object.__setattr__(self, "declared_bound", float(inferred))
            return
        declared = float(self.declared_bound)
        if not (declared >= 0 and math.isfinite(declared)):
            raise UnboundedFunction("declared bound must be finite and non-negative")
        if declared < inferred:
            witnessed = self._sup_on(spot_points(self.domain))
            if witnessed > declared:
                raise UnboundedFunction(f"declared bound {declared} violated (|f| reaches {witnessed})")
        object.__setattr__(self, "declared_bound", declared)

    def _sup_on(self, points) -> float:
        vals = self.values(self.domain.to_batch(points))
        return float(np.max(np.abs(vals))) if len(vals) else 0.0

    @property
    def bound(self) -> float:
        return self.declared_bound

    def values(self, batch) -> np.ndarray:
        out = evaluate(self.body, batch)
        if isinstance(out, tuple) or out.dtype.kind not in "fiu":
            raise ExpressionError("a test function must be real-valued")
        out = np.asarray(out, dtype=float)
        _check_finite(out)
        return out

    def __call__(self, x) -> float:
        return eval_fn(self, x)

    def _combine(self, other, name, bound):
        if isinstance(other, TestFunction):
            if other.domain != self.domain:
                raise DomainMismatch(f"cannot combine functions on {self.domain} and {other.domain}")
            return TestFunction(Expr(name, (self.body, other.body)), self.domain, bound(self.bound, other.bound), trusted=True)
        c = float(other)
        return TestFunction(Expr(name, (self.body, as_expr(other))), self.domain, bound(self.bound, abs(c)), trusted=True)

    def __add__(self, other):
        return self._combine(other, "add", lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, "sub", lambda a, b: a + b)

    def __mul__(self, other):
        return self._combine(other, "mul", lambda a, b: a * b)

    __rmul__ = __mul__

    def __neg__(self):
        return TestFunction(-self.body, self.domain, self.bound, trusted=True)

    def restrict(self, space: SpaceDescriptor) -> "TestFunction":
        if not space.is_subspace_of(self.domain):
            raise DomainMismatch(f"{space} is not a subspace of {self.domain}")
        return TestFunction(self.body, space, self.bound, trusted=True)

    def to_json(self) -> dict:
        return {"body": to_sexpr(self.body), "domain": self.domain.to_json(), "bound": self.bound}

    @classmethod
    def from_json(cls, obj) -> "TestFunction":
        return cls(from_sexpr(obj["body"]), space_from_json(obj["domain"]), obj.get("bound"))

    def __str__(self):
        return f"fn {to_sexpr(self.body)} on {self.domain}"


def constant(c: float, domain: SpaceDescriptor) -> TestFunction:
    return TestFunction(as_expr(c), domain)


def eval_fn(f: TestFunction, x) -> float:
    if not f.domain.contains(x):
        raise DomainMismatch(f"{x!r} is not in {f.domain}")
    x = f.domain.coerce(x)
    return float(f.values(f.domain.to_batch([x]))[0])


def bound_of(f: TestFunction) -> float:
    return f.bound


def tighten(f: TestFunction) -> TestFunction:
    """Replace the bound by the exact sup-norm on finite domains."""
    if not f.domain.is_finite:
        return f
    return TestFunction(f.body, f.domain, f._sup_on(f.domain.points()), trusted=True)


def space_of_points(points) -> SpaceDescriptor:
    """Smallest supported descriptor containing a non-empty list of points."""
    points = list(points)
    if not points:
        raise DomainMismatch("no points")
    if all(isinstance(p, tuple) for p in points):
        return ProductSpace(space_of_points([p[0] for p in points]), space_of_points([p[1] for p in points]))
    if all(isinstance(p, bool) for p in points):
        return FiniteSet(tuple(v for v in (False, True) if v in points))
    if all(is_real(p) for p in points):
        if all(float(p).is_integer() for p in points) and all(isinstance(p, int) for p in points):
            return IntRange(int(min(points)), int(max(points)))
        lo, hi = float(min(points)), float(max(points))
        return RealInterval(lo, hi) if lo < hi else FiniteSet((lo,))
    seen = []
    for p in points:
        if not any(type(p) is type(q) and p == q for q in seen):
            seen.append(p)
    return FiniteSet(tuple(seen))


@dataclass(frozen=True)
class ContinuousMap:
    """Expression-tree map ``domain -> codomain``.

    The codomain is inferred when omitted: by enumerating images on finite
    domains, by interval analysis otherwise.  A declared codomain must
    contain the inferred one.
    """

    body: Expr
    domain: SpaceDescriptor
    codomain: SpaceDescriptor | None = None

    def __post_init__(self):
        body = as_expr(self.body)
        object.__setattr__(self, "body", body)
        if free_params(body):
            raise ExpressionError(f"unbound parameters {sorted(free_params(body))}")
        enc = enclose(body, abstract_of_space(self.domain))
        if self.domain.is_finite:
            images = self._images(enc)
            if self.codomain is not None:
                # finite image: check membership point by point
                for v in images:
                    if not self.codomain.contains(v):
                        raise DomainMismatch(f"image {v!r} of {to_sexpr(body)} is not in {self.codomain}")
                return
            inferred = space_of_points(images)
        else:
            inferred = space_of_abstract(enc)
        if self.codomain is None:
            object.__setattr__(self, "codomain", inferred)
        elif not (inferred == self.codomain or inferred.is_subspace_of(self.codomain)):
            raise DomainMismatch(f"image {inferred} of {to_sexpr(body)} is not inside {self.codomain}")

    def _images(self, enc) -> list:
        out = evaluate(self.body, self.domain.to_batch(self.domain.points()))
        _check_finite(out)
        return _unbatch(out, enc)

    def apply(self, batch):
        out = evaluate(self.body, batch)
        _check_finite(out)
        return out

    def __call__(self, x):
        if not self.domain.contains(x):
            raise DomainMismatch(f"{x!r} is not in {self.domain}")
        out = self.apply(self.domain.to_batch([self.domain.coerce(x)]))
        return self.codomain.from_batch(out)[0]

    def then(self, other: "ContinuousMap") -> "ContinuousMap":
        """``other`` after ``self``."""
        if not (self.codomain == other.domain or self.codomain.is_subspace_of(other.domain)):
            raise DomainMismatch(f"cannot compose {self.codomain} into {other.domain}")
        return ContinuousMap(substitute(other.body, self.body), self.domain, other.codomain)

    def to_json(self) -> dict:
        return {"body": to_sexpr(self.body), "domain": self.domain.to_json(), "codomain": self.codomain.to_json()}

    @classmethod
    def from_json(cls, obj) -> "ContinuousMap":
        return cls(from_sexpr(obj["body"]), space_from_json(obj["domain"]), space_from_json(obj["codomain"]))

    @classmethod
    def identity(cls, space: SpaceDescriptor) -> "ContinuousMap":
        return cls(X, space, space)

    @classmethod
    def constant_at(cls, value, domain: SpaceDescriptor, codomain: SpaceDescriptor) -> "ContinuousMap":
        return cls(lift_value(value), domain, codomain)

    def __str__(self):
        return f"map {to_sexpr(self.body)} : {self.domain} -> {self.codomain}"


def _unbatch(out, enc) -> list:
    if isinstance(out, tuple):
        return list(zip(_unbatch(out[0], enc.left), _unbatch(out[1], enc.right)))
    vals = [v.item() if hasattr(v, "item") else v for v in out]
    if getattr(enc, "integral", False):
        return [int(v) for v in vals]
    if out.dtype.kind == "f":
        return [float(v) for v in vals]
    return vals


def compose_fn(f: TestFunction, g: ContinuousMap) -> TestFunction:
    """Pull ``f`` back along ``g``: the observable ``x -> f(g(x))``."""
    if not (g.codomain == f.domain or g.codomain.is_subspace_of(f.domain)):
        raise DomainMismatch(f"map lands in {g.codomain}, function lives on {f.domain}")
    return TestFunction(substitute(f.body, g.body), g.domain, f.bound, trusted=True)


def projection(space: ProductSpace, i: int) -> ContinuousMap:
    if not isinstance(space, ProductSpace):
        from .errors import NotProduct

        raise NotProduct(f"{space} is not a product space")
    body = Expr("fst", (X,)) if i == 1 else Expr("snd", (X,))
    return ContinuousMap(body, space, space.left if i == 1 else space.right)


def swap_map(space: ProductSpace) -> ContinuousMap:
    return ContinuousMap(Expr("pair", (Expr("snd", (X,)), Expr("fst", (X,)))), space, ProductSpace(space.right, space.left))


__all__ = [
    "ContinuousMap",
    "TestFunction",
    "bound_of",
    "compose_fn",
    "constant",
    "eval_fn",
    "projection",
    "space_of_points",
    "spot_points",
    "swap_map",
    "tighten",
]

