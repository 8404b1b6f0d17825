"""Measures as construction trees, read through their integration functionals.

A measure is never stored as a set function.  Each node knows how to
integrate a bounded observable, and that integral *is* its meaning:
``integrate(mu, f)`` walks the tree recursively (point evaluation for Dirac
atoms, Gauss-Legendre for densities, iterated integrals for products,
``pi(mu -> mu(f))`` for joins).  Internally the observable is vector-valued
so a whole battery of test functions is integrated in one pass.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Any, Callable, Sequence

import numpy as np

from .errors import (
    BackendUnsupported,
    DomainMismatch,
    NonFinite,
    NotProbability,
    RejectionStall,
    SerializationError,
    SpaceMismatch,
)
from .expr import abstract_of_space, enclose
from .functions import ContinuousMap, TestFunction, constant
from .spaces import (
    FiniteSet,
    ProductSpace,
    RealInterval,
    RealLine,
    SpaceDescriptor,
    batch_concat,
    batch_len,
    batch_repeat,
    batch_take,
    batch_tile,
    space_from_json,
    value_from_json,
    value_to_json,
)

DEFAULT_SEED = 20240611
DEFAULT_ORDER = 64
DEFAULT_TOL = {"exact": 1e-12, "quadrature": 1e-6}
MC_BLOCK = 4096
REJECTION_FLOOR = 1e-3


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class IntegrationConfig:
    """How integrals are computed.

    ``backend`` is ``"exact"`` (finite sums only), ``"quadrature"``
    (Gauss-Legendre of the given order at density leaves), ``"montecarlo"``
    (seeded sample means) or ``"auto"`` (exact when the tree allows it,
    quadrature otherwise).
    """

    backend: str = "auto"
    order: int = DEFAULT_ORDER
    samples: int = 10_000
    seed: int = DEFAULT_SEED
    tol_abs: float | None = None
    threads: int = 1

    def __post_init__(self):
        if self.backend not in ("auto", "exact", "quadrature", "montecarlo"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.order < 2:
            raise ValueError("quadrature order must be >= 2")
        if self.samples < 1:
            raise ValueError("Monte Carlo needs at least one sample")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.tol_abs is not None and self.tol_abs < 0:
            raise ValueError("tolerance must be non-negative")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def tolerance(self) -> float:
        if self.tol_abs is not None:
            return self.tol_abs
        if self.backend == "montecarlo":
            return 4.0 / math.sqrt(self.samples)
        return DEFAULT_TOL.get(self.backend, DEFAULT_TOL["quadrature"])

    def label(self) -> str:
        if self.backend == "quadrature":
            return f"quad:{self.order}"
        if self.backend == "montecarlo":
            return f"mc:{self.samples}"
        return self.backend

    def to_json(self) -> dict:
        return {
            "backend": self.label(),
            "seed": self.seed,
            "tol_abs": self.tolerance,
        }

    @classmethod
    def parse(cls, text: str | None, **kw) -> "IntegrationConfig":
        """Parse ``exact``, ``quad:<order>``, ``mc:<samples>`` or ``auto``."""
        if text in (None, "", "auto"):
            return cls("auto", **kw)
        if text == "exact":
            return cls("exact", **kw)
        name, _, arg = text.partition(":")
        if name in ("quad", "quadrature"):
            return cls("quadrature", order=int(arg) if arg else DEFAULT_ORDER, **kw)
        if name in ("mc", "montecarlo"):
            return cls("montecarlo", samples=int(arg) if arg else 10_000, **kw)
        raise ValueError(f"unknown backend {text!r}")


def Exact(**kw) -> IntegrationConfig:
    return IntegrationConfig("exact", **kw)


def Quadrature(order: int = DEFAULT_ORDER, **kw) -> IntegrationConfig:
    return IntegrationConfig("quadrature", order=order, **kw)


def MonteCarlo(samples: int, seed: int = DEFAULT_SEED, **kw) -> IntegrationConfig:
    return IntegrationConfig("montecarlo", samples=samples, seed=seed, **kw)


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


# ---------------------------------------------------------------------------
# nodes


class Measure:
    """Base class of measure construction trees."""

    space: SpaceDescriptor

    def __add__(self, other: "Measure") -> "Measure":
        return Sum(self, other)

    def __mul__(self, c: float) -> "Measure":
        return Scale(float(c), self)

    __rmul__ = __mul__

    def __neg__(self) -> "Measure":
        return Scale(-1.0, self)

    def children(self) -> tuple:
        return ()

    def to_json(self) -> dict:
        return measure_to_json(self)


@dataclass(frozen=True)
class Dirac(Measure):
    point: Any
    space: SpaceDescriptor

    def __post_init__(self):
        object.__setattr__(self, "point", self.space.coerce(self.point))


@dataclass(frozen=True)
class FiniteWeighted(Measure):
    atoms: tuple
    space: SpaceDescriptor

    def __post_init__(self):
        atoms = tuple((self.space.coerce(p), float(w)) for p, w in self.atoms)
        if not atoms:
            raise DomainMismatch("FiniteWeighted needs at least one atom")
        if not all(math.isfinite(w) for _, w in atoms):
            raise NonFinite("atom weights must be finite")
        object.__setattr__(self, "atoms", atoms)

    @property
    def points(self) -> list:
        return [p for p, _ in self.atoms]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)


@dataclass(frozen=True)
class Density(Measure):
    """``normalization * density(x) dx`` on ``interval``, living on ``space``.

    ``density.bound`` doubles as the rejection-sampling envelope.
    """

    density: TestFunction
    normalization: float
    interval: RealInterval
    space: SpaceDescriptor | None = None

    def __post_init__(self):
        if self.space is None:
            object.__setattr__(self, "space", self.interval)
        if not isinstance(self.interval, RealInterval):
            raise DomainMismatch("densities live on bounded intervals")
        if not isinstance(self.space, (RealInterval, RealLine)) or not self.interval.is_subspace_of(self.space):
            raise DomainMismatch(f"{self.interval} is not inside {self.space}")
        if not self.interval.is_subspace_of(self.density.domain):
            raise DomainMismatch(f"density is defined on {self.density.domain}, not {self.interval}")
        if not math.isfinite(self.normalization):
            raise NonFinite("normalization must be finite")
        object.__setattr__(self, "normalization", float(self.normalization))

    @property
    def envelope(self) -> float:
        return self.density.bound


@dataclass(frozen=True)
class Pushforward(Measure):
    map: ContinuousMap
    base: Measure

    def __post_init__(self):
        if not (self.base.space == self.map.domain or self.base.space.is_subspace_of(self.map.domain)):
            raise DomainMismatch(f"map is defined on {self.map.domain}, measure lives on {self.base.space}")

    @property
    def space(self):
        return self.map.codomain

    def children(self):
        return (self.base,)


@dataclass(frozen=True)
class ProductNode(Measure):
    left: Measure
    right: Measure

    @property
    def space(self):
        return ProductSpace(self.left.space, self.right.space)

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Mixture:
    """Finite measure over measures: ``sum_i w_i * delta_{item_i}``.

    Items are all measures (an element of M(M(X))) or all mixtures (an
    element of M(M(M(X)))).
    """

    components: tuple

    def __post_init__(self):
        comps = tuple((item, float(w)) for item, w in self.components)
        if not comps:
            raise SpaceMismatch("a mixture needs at least one component")
        kinds = {isinstance(item, Mixture) for item, _ in comps}
        if len(kinds) != 1 or not all(isinstance(item, (Measure, Mixture)) for item, _ in comps):
            raise SpaceMismatch("mixture components must be all measures or all mixtures")
        spaces = {item.space for item, _ in comps}
        if len(spaces) != 1:
            raise SpaceMismatch(f"mixture components live on different spaces: {sorted(map(str, spaces))}")
        if not all(math.isfinite(w) for _, w in comps):
            raise NonFinite("mixture weights must be finite")
        object.__setattr__(self, "components", comps)

    @classmethod
    def point(cls, item) -> "Mixture":
        """The unit one level up: ``delta_item``."""
        return cls(((item, 1.0),))

    @property
    def space(self) -> SpaceDescriptor:
        return self.components[0][0].space

    @property
    def level(self) -> int:
        first = self.components[0][0]
        return 1 + (first.level if isinstance(first, Mixture) else 0)

    @property
    def items(self) -> list:
        return [item for item, _ in self.components]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.components], dtype=float)

    def map(self, fn: Callable) -> "Mixture":
        """Pushforward along a map between spaces of measures."""
        return Mixture(tuple((fn(item), w) for item, w in self.components))

    def integrate(self, functional: Callable[[Any], float]) -> float:
        """``pi(F) = sum_i w_i F(item_i)`` for a functional on measures."""
        return math.fsum(w * functional(item) for item, w in self.components)

    def to_json(self) -> dict:
        return mixture_to_json(self)


@dataclass(frozen=True)
class JoinNode(Measure):
    outer: Mixture

    def __post_init__(self):
        if self.outer.level != 1:
            raise SpaceMismatch("JoinNode takes a mixture of measures")

    @property
    def space(self):
        return self.outer.space

    def children(self):
        return tuple(self.outer.items)


class Kernel:
    """Markov kernel / Kleisli arrow ``domain -> M(codomain)``."""

    domain: SpaceDescriptor
    codomain: SpaceDescriptor
    tag: str = "kernel"

    def rule(self, x) -> Measure:
        raise NotImplementedError

    def __call__(self, x) -> Measure:
        x = self.domain.coerce(x)
        out = self.rule(x)
        if out.space != self.codomain:
            raise SpaceMismatch(f"kernel produced a measure on {out.space}, expected {self.codomain}")
        return out

    def integrate_points(self, xs, space: SpaceDescriptor, h: Callable, k: int, integrate: Callable) -> np.ndarray:
        """``(n, k)`` array of ``k(x_i)(h)`` for a batch of base points.

        ``integrate(measure, h, k)`` is the engine's own recursion.
        Subclasses may vectorise over the batch.
        """
        return np.stack([integrate(self(x), h, k) for x in space.from_batch(xs)])

    def nonnegative(self) -> bool:
        return False

    def variation_bound(self) -> float:
        return math.inf

    def probability(self) -> bool:
        """Structural certificate that every ``k(x)`` is a probability."""
        return False

    def to_json(self) -> dict:
        raise SerializationError(f"{type(self).__name__} is not serializable")


@dataclass(frozen=True)
class BindNode(Measure):
    base: Measure
    kernel: Kernel

    def __post_init__(self):
        if not (self.base.space == self.kernel.domain or self.base.space.is_subspace_of(self.kernel.domain)):
            raise DomainMismatch(f"kernel is defined on {self.kernel.domain}, measure lives on {self.base.space}")

    @property
    def space(self):
        return self.kernel.codomain

    def children(self):
        return (self.base,)


@dataclass(frozen=True)
class Scale(Measure):
    c: float
    base: Measure

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise NonFinite("scale factor must be finite")
        object.__setattr__(self, "c", float(self.c))

    @property
    def space(self):
        return self.base.space

    def children(self):
        return (self.base,)


@dataclass(frozen=True)
class Sum(Measure):
    left: Measure
    right: Measure

    def __post_init__(self):
        if self.left.space != self.right.space:
            raise SpaceMismatch(f"cannot add measures on {self.left.space} and {self.right.space}")

    @property
    def space(self):
        return self.left.space

    def children(self):
        return (self.left, self.right)


# ---------------------------------------------------------------------------
# constructors


def dirac(x, space: SpaceDescriptor) -> Dirac:
    return Dirac(x, space)


def finite(atoms, space: SpaceDescriptor) -> FiniteWeighted:
    return FiniteWeighted(tuple(atoms), space)


def bernoulli(p: float) -> FiniteWeighted:
    if not 0.0 <= p <= 1.0:
        raise DomainMismatch(f"bernoulli parameter {p} outside [0, 1]")
    return FiniteWeighted(((False, 1.0 - p), (True, float(p))), FiniteSet((False, True)))


def uniform(a: float, b: float, space: SpaceDescriptor | None = None) -> Density:
    interval = RealInterval(a, b)
    return Density(constant(1.0, interval), 1.0 / interval.length, interval, space)


# ---------------------------------------------------------------------------
# integration engine

Observable = Callable[[Any], np.ndarray]  # batch of n points -> (n, k) array


def _wsum(weights: np.ndarray, vals: np.ndarray) -> np.ndarray:
    # fixed reduction order: numpy pairwise summation along axis 0
    return (weights[:, None] * vals).sum(axis=0)


def _points_batch(space: SpaceDescriptor, points: Sequence):
    return space.to_batch(list(points))


def _integrate(mu: Measure, h: Observable, cfg: IntegrationConfig, k: int) -> np.ndarray:
    if isinstance(mu, Dirac):
        return np.asarray(h(_points_batch(mu.space, [mu.point])), dtype=float).reshape(1, k)[0]
    if isinstance(mu, FiniteWeighted):
        vals = np.asarray(h(_points_batch(mu.space, mu.points)), dtype=float).reshape(len(mu.atoms), k)
        return _wsum(mu.weights, vals)
    if isinstance(mu, Density):
        if cfg.backend == "exact":
            raise BackendUnsupported("the exact backend cannot integrate a density leaf")
        nodes, wts = gauss_legendre(cfg.order)
        a, b = mu.interval.a, mu.interval.b
        half = 0.5 * (b - a)
        xs = half * nodes + 0.5 * (a + b)
        # clip guards against rounding just outside the interval
        xs = np.clip(xs, a, b)
        dens = mu.density.values(xs)
        w = wts * half * mu.normalization * dens
        vals = np.asarray(h(xs), dtype=float).reshape(len(xs), k)
        return _wsum(w, vals)
    if isinstance(mu, Pushforward):
        g = mu.map
        return _integrate(mu.base, lambda batch: h(g.apply(batch)), cfg, k)
    if isinstance(mu, ProductNode):
        # nu(y -> mu(x -> f(x, y)))
        left, right = mu.left, mu.right

        def outer(ys):
            m = batch_len(ys)

            def inner(xs):
                n = batch_len(xs)
                pairs = (batch_repeat(xs, m), batch_tile(ys, n))
                return np.asarray(h(pairs), dtype=float).reshape(n, m * k)

            return _integrate(left, inner, cfg, m * k).reshape(m, k)

        return _integrate(right, outer, cfg, k)
    if isinstance(mu, JoinNode):
        # pi(mu -> mu(f))
        parts = np.stack([_integrate(item, h, cfg, k) for item in mu.outer.items])
        return _wsum(mu.outer.weights, parts)
    if isinstance(mu, BindNode):
        kern = mu.kernel

        def through_kernel(xs):
            return kern.integrate_points(xs, mu.base.space, h, k, lambda m, hh, kk: _integrate(m, hh, cfg, kk))

        return _integrate(mu.base, through_kernel, cfg, k)
    if isinstance(mu, Scale):
        return mu.c * _integrate(mu.base, h, cfg, k)
    if isinstance(mu, Sum):
        return _integrate(mu.left, h, cfg, k) + _integrate(mu.right, h, cfg, k)
    raise TypeError(f"not a measure: {mu!r}")


def _check_domain(mu: Measure, fs: Sequence[TestFunction]):
    for f in fs:
        if not (f.domain == mu.space or mu.space.is_subspace_of(f.domain)):
            raise DomainMismatch(f"function on {f.domain} cannot be integrated against a measure on {mu.space}")


def resolve(mu: Measure, cfg: IntegrationConfig | None) -> IntegrationConfig:
    cfg = cfg or IntegrationConfig()
    if cfg.backend != "auto":
        return cfg
    backend = "exact" if is_finite_tree(mu) else "quadrature"
    return replace(cfg, backend=backend)


def observable(fs: Sequence[TestFunction]) -> Observable:
    fs = list(fs)

    def h(batch):
        return np.stack([f.values(batch) for f in fs], axis=-1)

    return h


def integrate_observable(mu: Measure, h: Observable, k: int, domain: SpaceDescriptor, cfg: IntegrationConfig | None = None) -> np.ndarray:
    """Integrate a vector observable ``h: batch -> (n, k)`` defined on ``domain``."""
    if not (domain == mu.space or mu.space.is_subspace_of(domain)):
        raise DomainMismatch(f"observable on {domain} cannot be integrated against a measure on {mu.space}")
    cfg = resolve(mu, cfg)
    if k == 0:
        return np.zeros(0)
    if cfg.backend == "montecarlo":
        out = _integrate_mc(mu, h, cfg, k, ())[0]
    else:
        out = _integrate(mu, h, cfg, k)
    if not np.all(np.isfinite(out)):
        raise NonFinite("integral is not finite")
    return out


def integrate_many(mu: Measure, fs: Sequence[TestFunction], cfg: IntegrationConfig | None = None) -> np.ndarray:
    """Integrals of several observables in one tree walk."""
    fs = list(fs)
    _check_domain(mu, fs)
    if not fs:
        return np.zeros(0)
    return integrate_observable(mu, observable(fs), len(fs), mu.space, cfg)


def integrate(mu: Measure, f: TestFunction, cfg: IntegrationConfig | None = None) -> float:
    """``mu(f) = int f dmu``."""
    return float(integrate_many(mu, [f], cfg)[0])


def integrate_with_error(mu: Measure, f: TestFunction, cfg: IntegrationConfig) -> tuple[float, float]:
    """Integral plus a standard-error estimate (zero for deterministic backends)."""
    _check_domain(mu, [f])
    cfg = resolve(mu, cfg)
    if cfg.backend != "montecarlo":
        return integrate(mu, f, cfg), 0.0
    value, var = _integrate_mc(mu, observable([f]), cfg, 1, ())
    return float(value[0]), float(math.sqrt(var[0]))


def total_mass(mu: Measure, cfg: IntegrationConfig | None = None) -> float:
    return integrate(mu, constant(1.0, mu.space), cfg)


def _exact_or_quad(mu: Measure) -> IntegrationConfig:
    return resolve(mu, IntegrationConfig())


# ---------------------------------------------------------------------------
# structural facts


def is_finite_tree(mu: Measure) -> bool:
    """True when every leaf is a Dirac or finite atom list."""
    if isinstance(mu, (Dirac, FiniteWeighted)):
        return True
    if isinstance(mu, Density):
        return False
    if isinstance(mu, BindNode):
        finite_kernel = getattr(mu.kernel, "is_finite", None)
        return is_finite_tree(mu.base) and bool(finite_kernel and finite_kernel())
    return all(is_finite_tree(c) for c in mu.children())


def nonnegative(mu: Measure) -> bool:
    if isinstance(mu, Dirac):
        return True
    if isinstance(mu, FiniteWeighted):
        return all(w >= 0 for _, w in mu.atoms)
    if isinstance(mu, Density):
        enc = enclose(mu.density.body, abstract_of_space(mu.interval))
        return mu.normalization >= 0 and enc.lo >= -1e-12
    if isinstance(mu, JoinNode):
        return all(w >= 0 for w in mu.outer.weights) and all(nonnegative(m) for m in mu.outer.items)
    if isinstance(mu, BindNode):
        return nonnegative(mu.base) and mu.kernel.nonnegative()
    if isinstance(mu, Scale):
        return mu.c >= 0 and nonnegative(mu.base)
    return all(nonnegative(c) for c in mu.children())


def variation_bound(mu: Measure) -> float:
    """Upper bound on total variation, computed from the tree alone."""
    if isinstance(mu, Dirac):
        return 1.0
    if isinstance(mu, FiniteWeighted):
        return math.fsum(abs(w) for _, w in mu.atoms)
    if isinstance(mu, Density):
        return abs(mu.normalization) * mu.density.bound * mu.interval.length
    if isinstance(mu, Pushforward):
        return variation_bound(mu.base)
    if isinstance(mu, ProductNode):
        return variation_bound(mu.left) * variation_bound(mu.right)
    if isinstance(mu, JoinNode):
        return math.fsum(abs(w) * variation_bound(m) for m, w in mu.outer.components)
    if isinstance(mu, BindNode):
        return variation_bound(mu.base) * mu.kernel.variation_bound()
    if isinstance(mu, Scale):
        return abs(mu.c) * variation_bound(mu.base)
    if isinstance(mu, Sum):
        return variation_bound(mu.left) + variation_bound(mu.right)
    raise TypeError(f"not a measure: {mu!r}")


def is_probability(mu: Measure, cfg: IntegrationConfig | None = None) -> bool:
    """Non-negativity certificate plus unit mass within tolerance."""
    if not nonnegative(mu):
        return False
    cfg = resolve(mu, cfg)
    if cfg.backend == "montecarlo":
        cfg = _exact_or_quad(mu)
    try:
        mass = total_mass(mu, cfg)
    except BackendUnsupported:
        cfg = replace(cfg, backend="quadrature")
        mass = total_mass(mu, cfg)
    except (NonFinite, DomainMismatch, SpaceMismatch):
        return False
    return abs(mass - 1.0) <= cfg.tolerance


def tree_depth(mu: Measure) -> int:
    return 1 + max((tree_depth(c) for c in mu.children()), default=0)


# ---------------------------------------------------------------------------
# sampling


def _seed_rng(seed: int, key: tuple) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def _mass_for_sampling(mu: Measure) -> float:
    return total_mass(mu, _exact_or_quad(mu))


def _choose(weights: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    total = weights.sum()
    if not total > 0 or np.any(weights < 0):
        raise NotProbability("cannot sample from weights that are not a positive distribution")
    cdf = np.cumsum(weights / total)
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    return np.minimum(idx, len(weights) - 1)


def _scatter(space: SpaceDescriptor, idx: np.ndarray, draw: Callable[[int, int], Any], count: int):
    """Assemble a batch where point j comes from component ``idx[j]``."""
    parts, order = [], []
    for i in range(count):
        where = np.nonzero(idx == i)[0]
        if len(where):
            parts.append(draw(i, len(where)))
            order.append(where)
    positions = np.concatenate(order)
    inv = np.argsort(positions, kind="stable")
    return batch_take(batch_concat(parts), inv)


def sample_batch(mu: Measure, n: int, rng: np.random.Generator):
    """Draw ``n`` points from a non-negative measure, normalized to mass 1."""
    if isinstance(mu, Dirac):
        return _points_batch(mu.space, [mu.point] * n)
    if isinstance(mu, FiniteWeighted):
        idx = _choose(mu.weights, n, rng)
        return batch_take(_points_batch(mu.space, mu.points), idx)
    if isinstance(mu, Density):
        return _rejection(mu, n, rng)
    if isinstance(mu, Pushforward):
        return mu.map.apply(sample_batch(mu.base, n, rng))
    if isinstance(mu, ProductNode):
        return (sample_batch(mu.left, n, rng), sample_batch(mu.right, n, rng))
    if isinstance(mu, JoinNode):
        masses = np.array([w * _mass_for_sampling(m) for m, w in mu.outer.components])
        idx = _choose(masses, n, rng)
        items = mu.outer.items
        return _scatter(mu.space, idx, lambda i, c: sample_batch(items[i], c, rng), len(items))
    if isinstance(mu, BindNode):
        xs = mu.base.space.from_batch(sample_batch(mu.base, n, rng))
        groups: dict = {}
        for j, x in enumerate(xs):
            groups.setdefault(_hashable(x), []).append(j)
        keys = list(groups)
        idx = np.empty(n, dtype=int)
        for i, key in enumerate(keys):
            idx[groups[key]] = i
        firsts = [xs[groups[key][0]] for key in keys]
        return _scatter(mu.space, idx, lambda i, c: sample_batch(mu.kernel(firsts[i]), c, rng), len(keys))
    if isinstance(mu, Scale):
        if mu.c < 0:
            raise NotProbability("negative scale")
        return sample_batch(mu.base, n, rng)
    if isinstance(mu, Sum):
        masses = np.array([_mass_for_sampling(mu.left), _mass_for_sampling(mu.right)])
        idx = _choose(masses, n, rng)
        sides = (mu.left, mu.right)
        return _scatter(mu.space, idx, lambda i, c: sample_batch(sides[i], c, rng), 2)
    raise TypeError(f"not a measure: {mu!r}")


def _hashable(x):
    return (type(x).__name__, x) if not isinstance(x, tuple) else tuple(_hashable(v) for v in x)


def _rejection(mu: Density, n: int, rng: np.random.Generator, floor: float = REJECTION_FLOOR) -> np.ndarray:
    a, b = mu.interval.a, mu.interval.b
    envelope = mu.envelope
    if not envelope > 0:
        raise NotProbability("density with zero envelope has no mass")
    out, have, proposed = [], 0, 0
    while have < n:
        m = max(64, 2 * (n - have))
        xs = rng.uniform(a, b, m)
        keep = rng.uniform(0.0, envelope, m) < mu.density.values(xs)
        proposed += m
        out.append(xs[keep])
        have += int(keep.sum())
        if proposed >= 10_000 and have / proposed < floor:
            raise RejectionStall(f"acceptance rate {have / proposed:.2e} below {floor:g}")
    return np.concatenate(out)[:n]


def draw(mu: Measure, n: int, seed: int = DEFAULT_SEED, key: tuple = (), threads: int = 1):
    """``n`` samples as a batch, reproducible for a given ``(seed, n)``.

    Samples come in fixed-size blocks, block ``b`` seeded from
    ``(seed, key, b)``, so the result does not depend on how blocks are
    scheduled across threads.
    """
    if not nonnegative(mu):
        raise NotProbability("sampling needs a non-negative measure")
    sizes = [min(MC_BLOCK, n - s) for s in range(0, n, MC_BLOCK)]

    def block(b):
        return sample_batch(mu, sizes[b], _seed_rng(seed, tuple(key) + (b,)))

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(block, range(len(sizes))))
    else:
        parts = [block(b) for b in range(len(sizes))]
    return batch_concat(parts)


def sample(mu: Measure, seed: int = DEFAULT_SEED):
    """One point drawn from a certified probability measure."""
    if not is_probability(mu):
        raise NotProbability("sample() needs a certified probability measure")
    return mu.space.from_batch(sample_batch(mu, 1, _seed_rng(seed, ())))[0]


def sample_many(mu: Measure, n: int, seed: int = DEFAULT_SEED, threads: int = 1) -> list:
    if not is_probability(mu):
        raise NotProbability("sampling needs a certified probability measure")
    return mu.space.from_batch(draw(mu, n, seed, (), threads))


def _integrate_mc(mu: Measure, h: Observable, cfg: IntegrationConfig, k: int, key: tuple):
    """Returns (estimate, variance of the estimate)."""
    if isinstance(mu, (Dirac, FiniteWeighted)):
        return _integrate(mu, h, replace(cfg, backend="exact"), k), np.zeros(k)
    if isinstance(mu, Scale):
        est, var = _integrate_mc(mu.base, h, cfg, k, key + (0,))
        return mu.c * est, mu.c**2 * var
    if isinstance(mu, Sum):
        e1, v1 = _integrate_mc(mu.left, h, cfg, k, key + (0,))
        e2, v2 = _integrate_mc(mu.right, h, cfg, k, key + (1,))
        return e1 + e2, v1 + v2
    if not nonnegative(mu):
        raise BackendUnsupported("Monte Carlo needs signed parts to be split by Scale/Sum")
    mass = _mass_for_sampling(mu)
    batch = draw(mu, cfg.samples, cfg.seed, key, cfg.threads)
    vals = np.asarray(h(batch), dtype=float).reshape(cfg.samples, k)
    mean = vals.mean(axis=0)
    var = vals.var(axis=0, ddof=1) / cfg.samples if cfg.samples > 1 else np.zeros(k)
    return mass * mean, mass**2 * var


# ---------------------------------------------------------------------------
# JSON

KERNEL_DECODERS: dict[str, Callable[[dict], Kernel]] = {}


def register_kernel(tag: str):
    def deco(fn):
        KERNEL_DECODERS[tag] = fn
        return fn

    return deco


def kernel_from_json(obj: dict) -> Kernel:
    tag = obj.get("tag")
    if tag not in KERNEL_DECODERS:
        # decoders register on import
        from . import dsl, kernels  # noqa: F401
    if tag not in KERNEL_DECODERS:
        raise SerializationError(f"unknown kernel tag {tag!r}")
    return KERNEL_DECODERS[tag](obj)


def measure_to_json(mu: Measure) -> dict:
    if isinstance(mu, Dirac):
        return {"tag": "dirac", "space": mu.space.to_json(), "point": value_to_json(mu.point)}
    if isinstance(mu, FiniteWeighted):
        return {
            "tag": "finite",
            "space": mu.space.to_json(),
            "atoms": [[value_to_json(p), w] for p, w in mu.atoms],
        }
    if isinstance(mu, Density):
        return {
            "tag": "density",
            "space": mu.space.to_json(),
            "interval": mu.interval.to_json(),
            "density": mu.density.to_json(),
            "normalization": mu.normalization,
        }
    if isinstance(mu, Pushforward):
        return {"tag": "pushforward", "map": mu.map.to_json(), "base": measure_to_json(mu.base)}
    if isinstance(mu, ProductNode):
        return {"tag": "product", "left": measure_to_json(mu.left), "right": measure_to_json(mu.right)}
    if isinstance(mu, JoinNode):
        return {"tag": "join", "outer": mixture_to_json(mu.outer)}
    if isinstance(mu, BindNode):
        return {"tag": "bind", "base": measure_to_json(mu.base), "kernel": mu.kernel.to_json()}
    if isinstance(mu, Scale):
        return {"tag": "scale", "c": mu.c, "base": measure_to_json(mu.base)}
    if isinstance(mu, Sum):
        return {"tag": "sum", "left": measure_to_json(mu.left), "right": measure_to_json(mu.right)}
    raise SerializationError(f"not a measure: {mu!r}")


def mixture_to_json(pi: Mixture) -> dict:
    def item(x):
        return mixture_to_json(x) if isinstance(x, Mixture) else measure_to_json(x)

    return {"tag": "mixture", "components": [{"item": item(m), "weight": w} for m, w in pi.components]}


def mixture_from_json(obj: dict) -> Mixture:
    if obj.get("tag") != "mixture":
        raise SerializationError("expected a mixture")
    comps = []
    for c in obj["components"]:
        it = c["item"]
        comps.append((mixture_from_json(it) if it.get("tag") == "mixture" else measure_from_json(it), c["weight"]))
    return Mixture(tuple(comps))


def measure_from_json(obj: dict) -> Measure:
    try:
        tag = obj["tag"]
        if tag == "dirac":
            space = space_from_json(obj["space"])
            return Dirac(value_from_json(obj["point"], space), space)
        if tag == "finite":
            space = space_from_json(obj["space"])
            return FiniteWeighted(tuple((value_from_json(p, space), w) for p, w in obj["atoms"]), space)
        if tag == "density":
            return Density(
                TestFunction.from_json(obj["density"]),
                obj["normalization"],
                space_from_json(obj["interval"]),
                space_from_json(obj["space"]),
            )
        if tag == "pushforward":
            return Pushforward(ContinuousMap.from_json(obj["map"]), measure_from_json(obj["base"]))
        if tag == "product":
            return ProductNode(measure_from_json(obj["left"]), measure_from_json(obj["right"]))
        if tag == "join":
            return JoinNode(mixture_from_json(obj["outer"]))
        if tag == "bind":
            return BindNode(measure_from_json(obj["base"]), kernel_from_json(obj["kernel"]))
        if tag == "scale":
            return Scale(obj["c"], measure_from_json(obj["base"]))
        if tag == "sum":
            return Sum(measure_from_json(obj["left"]), measure_from_json(obj["right"]))
    except (KeyError, TypeError, IndexError) as exc:
        raise SerializationError(f"malformed measure JSON: {exc}") from exc
    raise SerializationError(f"unknown measure tag {obj.get('tag')!r}")


__all__ = [
    "BindNode",
    "DEFAULT_SEED",
    "Density",
    "Dirac",
    "Exact",
    "FiniteWeighted",
    "IntegrationConfig",
    "JoinNode",
    "Kernel",
    "Measure",
    "Mixture",
    "MonteCarlo",
    "ProductNode",
    "Pushforward",
    "Quadrature",
    "Scale",
    "Sum",
    "bernoulli",
    "dirac",
    "draw",
    "finite",
    "integrate",
    "integrate_many",
    "integrate_observable",
    "integrate_with_error",
    "is_finite_tree",
    "is_probability",
    "measure_from_json",
    "measure_to_json",
    "mixture_from_json",
    "nonnegative",
    "sample",
    "sample_many",
    "total_mass",
    "tree_depth",
    "uniform",
    "variation_bound",
]

