"""Serializable Markov kernels ``X -> M(Y)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainMismatch, SpaceMismatch
from .functions import ContinuousMap
from .measures import (
    Dirac,
    Kernel,
    Measure,
    ProductNode,
    is_finite_tree,
    is_probability,
    measure_from_json,
    measure_to_json,
    nonnegative,
    register_kernel,
    variation_bound,
)
from .spaces import ProductSpace, SpaceDescriptor, batch_len, batch_repeat, batch_tile, space_from_json, value_from_json, value_to_json


@dataclass(frozen=True)
class UnitKernel(Kernel):
    """``x -> delta_x``."""

    domain: SpaceDescriptor
    tag = "unit"

    @property
    def codomain(self):
        return self.domain

    def rule(self, x):
        return Dirac(x, self.domain)

    def integrate_points(self, xs, space, h, k, integrate):
        # delta_x(h) = h(x), for the whole batch at once
        return np.asarray(h(xs), dtype=float).reshape(-1, k)

    def nonnegative(self):
        return True

    def probability(self):
        return True

    def variation_bound(self):
        return 1.0

    def is_finite(self):
        return True

    def to_json(self):
        return {"tag": self.tag, "domain": self.domain.to_json()}


@dataclass(frozen=True)
class MapKernel(Kernel):
    """``x -> delta_{g(x)}``: a deterministic kernel."""

    map: ContinuousMap
    tag = "map"

    @property
    def domain(self):
        return self.map.domain

    @property
    def codomain(self):
        return self.map.codomain

    def rule(self, x):
        return Dirac(self.map(x), self.codomain)

    def integrate_points(self, xs, space, h, k, integrate):
        return np.asarray(h(self.map.apply(xs)), dtype=float).reshape(-1, k)

    def nonnegative(self):
        return True

    def probability(self):
        return True

    def variation_bound(self):
        return 1.0

    def is_finite(self):
        return True

    def to_json(self):
        return {"tag": self.tag, "map": self.map.to_json()}


@dataclass(frozen=True)
class ConstKernel(Kernel):
    """``x -> nu`` for a fixed measure ``nu``."""

    domain: SpaceDescriptor
    measure: Measure
    tag = "const"

    @property
    def codomain(self):
        return self.measure.space

    def rule(self, x):
        return self.measure

    def integrate_points(self, xs, space, h, k, integrate):
        n = batch_len(xs)
        return np.tile(integrate(self.measure, h, k), (n, 1))

    def nonnegative(self):
        return nonnegative(self.measure)

    def probability(self):
        return is_probability(self.measure)

    def variation_bound(self):
        return variation_bound(self.measure)

    def is_finite(self):
        return is_finite_tree(self.measure)

    def to_json(self):
        return {"tag": self.tag, "domain": self.domain.to_json(), "measure": measure_to_json(self.measure)}


@dataclass(frozen=True)
class TableKernel(Kernel):
    """Kernel on a finite domain given by one measure per point."""

    domain: SpaceDescriptor
    table: tuple

    tag = "table"

    def __post_init__(self):
        if not self.domain.is_finite:
            raise DomainMismatch("a table kernel needs a finite domain")
        rows = tuple((self.domain.coerce(x), m) for x, m in self.table)
        keys = [x for x, _ in rows]
        if len(rows) != len(self.domain.points()) or not all(self.domain.contains(x) for x in keys):
            raise DomainMismatch("a table kernel needs exactly one row per domain point")
        if len({m.space for _, m in rows}) != 1:
            raise SpaceMismatch("table rows live on different spaces")
        object.__setattr__(self, "table", rows)

    @property
    def codomain(self):
        return self.table[0][1].space

    def rule(self, x):
        for key, m in self.table:
            if type(key) is type(x) and key == x:
                return m
        raise DomainMismatch(f"{x!r} has no row")

    def nonnegative(self):
        return all(nonnegative(m) for _, m in self.table)

    def probability(self):
        return all(is_probability(m) for _, m in self.table)

    def variation_bound(self):
        return max(variation_bound(m) for _, m in self.table)

    def is_finite(self):
        return all(is_finite_tree(m) for _, m in self.table)

    def to_json(self):
        return {
            "tag": self.tag,
            "domain": self.domain.to_json(),
            "rows": [[value_to_json(x), measure_to_json(m)] for x, m in self.table],
        }


@dataclass(frozen=True)
class LeftStrengthKernel(Kernel):
    """``x -> delta_x (x) nu``, the left strength with ``nu`` held fixed."""

    domain: SpaceDescriptor
    measure: Measure
    tag = "strength_left"

    @property
    def codomain(self):
        return ProductSpace(self.domain, self.measure.space)

    def rule(self, x):
        return ProductNode(Dirac(x, self.domain), self.measure)

    def integrate_points(self, xs, space, h, k, integrate):
        # (delta_{x_i} (x) nu)(h) = nu(y -> h(x_i, y)) for every i in one pass
        n = batch_len(xs)

        def inner(ys):
            m = batch_len(ys)
            pairs = (batch_tile(xs, m), batch_repeat(ys, n))
            return np.asarray(h(pairs), dtype=float).reshape(m, n * k)

        return integrate(self.measure, inner, n * k).reshape(n, k)

    def nonnegative(self):
        return nonnegative(self.measure)

    def probability(self):
        return is_probability(self.measure)

    def variation_bound(self):
        return variation_bound(self.measure)

    def is_finite(self):
        return is_finite_tree(self.measure)

    def to_json(self):
        return {"tag": self.tag, "domain": self.domain.to_json(), "measure": measure_to_json(self.measure)}


@dataclass(frozen=True)
class RightStrengthKernel(Kernel):
    """``y -> mu (x) delta_y``, the right strength with ``mu`` held fixed."""

    domain: SpaceDescriptor
    measure: Measure
    tag = "strength_right"

    @property
    def codomain(self):
        return ProductSpace(self.measure.space, self.domain)

    def rule(self, y):
        return ProductNode(self.measure, Dirac(y, self.domain))

    def integrate_points(self, ys, space, h, k, integrate):
        # (mu (x) delta_{y_i})(h) = mu(x -> h(x, y_i)) for every i in one pass
        n = batch_len(ys)

        def inner(xs):
            m = batch_len(xs)
            pairs = (batch_repeat(xs, n), batch_tile(ys, m))
            return np.asarray(h(pairs), dtype=float).reshape(m, n * k)

        return integrate(self.measure, inner, n * k).reshape(n, k)

    def nonnegative(self):
        return nonnegative(self.measure)

    def probability(self):
        return is_probability(self.measure)

    def variation_bound(self):
        return variation_bound(self.measure)

    def is_finite(self):
        return is_finite_tree(self.measure)

    def to_json(self):
        return {"tag": self.tag, "domain": self.domain.to_json(), "measure": measure_to_json(self.measure)}


@register_kernel("unit")
def _unit(obj):
    return UnitKernel(space_from_json(obj["domain"]))


@register_kernel("map")
def _map(obj):
    return MapKernel(ContinuousMap.from_json(obj["map"]))


@register_kernel("const")
def _const(obj):
    return ConstKernel(space_from_json(obj["domain"]), measure_from_json(obj["measure"]))


@register_kernel("table")
def _table(obj):
    domain = space_from_json(obj["domain"])
    return TableKernel(domain, tuple((value_from_json(x, domain), measure_from_json(m)) for x, m in obj["rows"]))


@register_kernel("strength_left")
def _strength_left(obj):
    return LeftStrengthKernel(space_from_json(obj["domain"]), measure_from_json(obj["measure"]))


@register_kernel("strength_right")
def _strength_right(obj):
    return RightStrengthKernel(space_from_json(obj["domain"]), measure_from_json(obj["measure"]))


__all__ = [
    "ConstKernel",
    "LeftStrengthKernel",
    "MapKernel",
    "RightStrengthKernel",
    "TableKernel",
    "UnitKernel",
]
