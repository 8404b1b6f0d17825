"""Seeded random instances for the law sweeps.

Each trial ``t`` draws from its own generator ``default_rng([seed, t])`` so
that instances do not depend on how trials are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import X, clamp, const, cos, eq, if_, sin
from .functions import ContinuousMap, TestFunction
from .kernels import ConstKernel, TableKernel
from .measures import (
    BindNode,
    Density,
    Dirac,
    FiniteWeighted,
    JoinNode,
    Measure,
    Mixture,
    Pushforward,
    Scale,
    Sum,
)
from .spaces import FiniteSet, IntRange, RealInterval, SpaceDescriptor

SYMBOLS = ("a", "b", "c", "d", "e", "f", "g", "h")


@dataclass(frozen=True)
class Instance:
    """Everything one trial of any law needs."""

    trial: int
    space: SpaceDescriptor
    mu: Measure
    pi: Mixture
    big_pi: Mixture
    map: ContinuousMap
    point: object
    other: Measure

    def describe(self) -> dict:
        return {"trial": self.trial, "space": self.space.to_json(), "map": self.map.to_json()}


class MeasureGenerator:
    """Base class: subclasses supply spaces, measures and maps."""

    name = "generator"

    def __init__(self, seed: int = 0):
        self.seed = int(seed)

    def rng(self, trial: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, trial])

    def space(self, rng) -> SpaceDescriptor:
        raise NotImplementedError

    def measure(self, rng, space, depth: int = 2) -> Measure:
        raise NotImplementedError

    def map(self, rng, space) -> ContinuousMap:
        raise NotImplementedError

    def mixture(self, rng, space, size: int | None = None) -> Mixture:
        size = size or int(rng.integers(1, 4))
        weights = rng.dirichlet(np.ones(size))
        return Mixture(tuple((self.measure(rng, space, 1), float(w)) for w in weights))

    def mixture2(self, rng, space) -> Mixture:
        size = int(rng.integers(1, 3))
        weights = rng.dirichlet(np.ones(size))
        return Mixture(tuple((self.mixture(rng, space), float(w)) for w in weights))

    def point(self, rng, space):
        raise NotImplementedError

    def law_map(self, rng, space) -> ContinuousMap:
        """The map handed to naturality checks."""
        return self.map(rng, space)

    def instance(self, trial: int) -> Instance:
        rng = self.rng(trial)
        space = self.space(rng)
        mu = self.measure(rng, space)
        pi = self.mixture(rng, space)
        big_pi = self.mixture2(rng, space)
        g = self.law_map(rng, space)
        x = self.point(rng, space)
        other_space = self.space(rng)
        other = self.measure(rng, other_space)
        return Instance(trial, space, mu, pi, big_pi, g, x, other)


class FiniteGenerator(MeasureGenerator):
    """Measures on finite carriers of at most ``max_points`` points."""

    name = "finite"

    def __init__(self, seed: int = 0, max_points: int = 5):
        super().__init__(seed)
        self.max_points = max_points

    def space(self, rng):
        n = int(rng.integers(1, self.max_points + 1))
        kind = int(rng.integers(0, 4))
        if kind == 0:
            return FiniteSet(SYMBOLS[:n])
        if kind == 1:
            lo = int(rng.integers(-2, 3))
            return IntRange(lo, lo + n - 1)
        if kind == 2:
            return FiniteSet((False, True)[: max(1, min(n, 2))])
        return FiniteSet(tuple(round(0.25 * i, 2) for i in range(n)))

    def point(self, rng, space):
        pts = space.points()
        return pts[int(rng.integers(0, len(pts)))]

    def _atoms(self, rng, space) -> FiniteWeighted:
        pts = space.points()
        k = int(rng.integers(1, len(pts) + 1))
        chosen = rng.choice(len(pts), size=k, replace=False)
        weights = rng.dirichlet(np.ones(k))
        return FiniteWeighted(tuple((pts[int(i)], float(w)) for i, w in zip(chosen, weights)), space)

    def measure(self, rng, space, depth: int = 2):
        kind = int(rng.integers(0, 6 if depth > 0 else 2))
        if kind == 0:
            return Dirac(self.point(rng, space), space)
        if kind == 1:
            return self._atoms(rng, space)
        if kind == 2:
            w = float(rng.uniform(0.1, 0.9))
            return Sum(Scale(w, self.measure(rng, space, depth - 1)), Scale(1 - w, self.measure(rng, space, depth - 1)))
        if kind == 3:
            rows = tuple((x, self.measure(rng, space, depth - 1)) for x in space.points())
            return BindNode(self._atoms(rng, space), TableKernel(space, rows))
        if kind == 4:
            return JoinNode(self.mixture(rng, space))
        return Pushforward(self.map(rng, space), self.measure(rng, space, depth - 1))

    def map(self, rng, space):
        """A map of ``space`` into itself."""
        pts = space.points()
        if len(pts) == 1:
            return ContinuousMap(X, space, space)
        kind = int(rng.integers(0, 3))
        if kind == 0:
            return ContinuousMap(X, space, space)
        if kind == 1:
            # swap two points, fix the rest
            i, j = rng.choice(len(pts), size=2, replace=False)
            a, b = pts[int(i)], pts[int(j)]
            body = if_(eq(X, const(a)), const(b), if_(eq(X, const(b)), const(a), X))
            return ContinuousMap(body, space, space)
        c = pts[int(rng.integers(0, len(pts)))]
        return ContinuousMap(const(c), space, space)


class ShiftMapGenerator(FiniteGenerator):
    """Integer carriers with ``x -> x + 1`` into the shifted range."""

    name = "finite_shift"

    def space(self, rng):
        n = int(rng.integers(1, self.max_points + 1))
        lo = int(rng.integers(-2, 3))
        return IntRange(lo, lo + n - 1)

    def law_map(self, rng, space):
        return ContinuousMap(X + 1, space, IntRange(space.lo + 1, space.hi + 1))


INTERVALS = ((0.0, 1.0), (-1.0, 1.0), (0.0, 2.0), (-2.0, 3.0))


class IntervalGenerator(MeasureGenerator):
    """Smooth densities, atoms and their combinations on bounded intervals."""

    name = "interval"

    def space(self, rng):
        a, b = INTERVALS[int(rng.integers(0, len(INTERVALS)))]
        return RealInterval(a, b)

    def point(self, rng, space):
        return float(np.round(rng.uniform(space.a, space.b), 6))

    def _density(self, rng, space) -> Density:
        kind = int(rng.integers(0, 3))
        a, b = space.a, space.b
        if kind == 0:
            lo, hi = sorted(np.round(rng.uniform(a, b, 2), 4))
            if hi - lo < 0.05:
                lo, hi = a, b
            sub = RealInterval(float(lo), float(hi))
            return Density(TestFunction(const(1.0), sub), 1.0 / sub.length, sub, space)
        if kind == 1:
            t = float(np.round(rng.uniform(0.0, 2.0), 4))
            mass = (b - a) + t * (b**3 - a**3) / 3.0
            return Density(TestFunction(1.0 + t * X * X, space), 1.0 / mass, space, space)
        # 1 + s*sin(x) stays positive for |s| < 1
        s = float(np.round(rng.uniform(-0.9, 0.9), 4))
        mass = (b - a) + s * (np.cos(a) - np.cos(b))
        return Density(TestFunction(1.0 + s * sin(X), space), 1.0 / float(mass), space, space)

    def measure(self, rng, space, depth: int = 2):
        kind = int(rng.integers(0, 5 if depth > 0 else 2))
        if kind == 0:
            return self._density(rng, space)
        if kind == 1:
            return Dirac(self.point(rng, space), space) if rng.random() < 0.3 else self._density(rng, space)
        if kind == 2:
            w = float(rng.uniform(0.1, 0.9))
            return Sum(Scale(w, self.measure(rng, space, depth - 1)), Scale(1 - w, self.measure(rng, space, depth - 1)))
        if kind == 3:
            return Pushforward(self.map(rng, space), self.measure(rng, space, depth - 1))
        return BindNode(self.measure(rng, space, 0), ConstKernel(space, self.measure(rng, space, 0)))

    def map(self, rng, space):
        """A smooth map of ``space`` into itself."""
        a, b = space.a, space.b
        kind = int(rng.integers(0, 4))
        u = (X - a) * (1.0 / (b - a))
        if kind == 0:
            body = a + (b - a) * (u * u)
        elif kind == 1:
            body = a + (b - a) * (0.5 + 0.5 * sin(3.0 * X))
        elif kind == 2:
            body = a + (b - a) * (0.5 + 0.5 * cos(X))
        else:
            return ContinuousMap(X, space, space)
        # clamping only absorbs rounding: each body maps into [a, b] exactly
        return ContinuousMap(clamp(body, a, b), space, space)


GENERATORS = {
    "finite": FiniteGenerator,
    "finite_shift": ShiftMapGenerator,
    "interval": IntervalGenerator,
}


__all__ = [
    "FiniteGenerator",
    "GENERATORS",
    "Instance",
    "IntervalGenerator",
    "MeasureGenerator",
    "ShiftMapGenerator",
]
