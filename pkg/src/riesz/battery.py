"""The declared finite family of test functions used for extensional equality.

Two measures are treated as equal when they agree, within tolerance, on
every battery function of their space.  Each function carries a certified
Lipschitz constant (``inf`` on discrete carriers, where only exact
agreement matters), which the convergence harness uses for its bounds.

Battery contents, version 1:

* finite carriers: the indicator of every point;
* ``[a, b]``: the constant 1, ``u**k`` for ``k = 1..8`` with
  ``u = (x - c) / r`` rescaling the interval onto ``[-1, 1]``, and
  ``sin(j x)``, ``cos(j x)`` for ``j = 1..4``;
* the real line: 1, ``sin(j x)``, ``cos(j x)`` and ``clamp(x, -1, 1)**k``;
* products: every product ``f(fst) * g(snd)`` of factor batteries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .expr import Expr, X, clamp, const, cos, eq, fst, if_, sin, snd, substitute
from .functions import TestFunction
from .measures import IntegrationConfig, Measure, integrate_observable
from .spaces import (
    FiniteSet,
    IntRange,
    ProductSpace,
    RealInterval,
    RealLine,
    SpaceDescriptor,
    format_value,
    join_spaces,
)

BATTERY_VERSION = 1
MAX_DEGREE = 8
MAX_FREQUENCY = 4


@dataclass(frozen=True)
class BatteryFunction:
    name: str
    fn: TestFunction
    lipschitz: float


@dataclass(frozen=True)
class Battery:
    space: SpaceDescriptor
    functions: tuple

    def __len__(self):
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    @property
    def lipschitz(self) -> float:
        """Largest certified Lipschitz constant in the battery."""
        return max(b.lipschitz for b in self.functions)

    @property
    def test_functions(self) -> list:
        return [b.fn for b in self.functions]

    def names(self) -> list[str]:
        return [b.name for b in self.functions]

    def observable(self):
        """Vectorised ``batch -> (n, len(self))`` evaluation of every function.

        On products the factor batteries are evaluated once and combined
        by an outer product, in the same order as ``functions``.
        """
        if isinstance(self.space, ProductSpace):
            left, right = battery(self.space.left).observable(), battery(self.space.right).observable()

            def h(batch):
                a, b = left(batch[0]), right(batch[1])
                return (a[:, :, None] * b[:, None, :]).reshape(len(a), -1)

            return h
        fns = self.test_functions
        return lambda batch: np.stack([f.values(batch) for f in fns], axis=-1)


def _finite(space) -> list[BatteryFunction]:
    return [
        BatteryFunction(f"ind[{format_value(p)}]", TestFunction(if_(eq(X, const(p)), 1.0, 0.0), space), math.inf)
        for p in space.points()
    ]


def _trig(space) -> list[BatteryFunction]:
    out = []
    for j in range(1, MAX_FREQUENCY + 1):
        out.append(BatteryFunction(f"sin({j}x)", TestFunction(sin(j * X), space), float(j)))
        out.append(BatteryFunction(f"cos({j}x)", TestFunction(cos(j * X), space), float(j)))
    return out


def _interval(space: RealInterval) -> list[BatteryFunction]:
    c, r = 0.5 * (space.a + space.b), 0.5 * space.length
    u = (X - c) * (1.0 / r)
    out = [BatteryFunction("1", TestFunction(const(1.0), space), 0.0)]
    for k in range(1, MAX_DEGREE + 1):
        out.append(BatteryFunction(f"u^{k}", TestFunction(Expr("pow", (u,), k), space, 1.0), k / r))
    return out + _trig(space)


def _line(space: RealLine) -> list[BatteryFunction]:
    out = [BatteryFunction("1", TestFunction(const(1.0), space), 0.0)]
    c = clamp(X, -1.0, 1.0)
    for k in range(1, MAX_DEGREE + 1):
        out.append(BatteryFunction(f"clamp(x)^{k}", TestFunction(Expr("pow", (c,), k), space), float(k)))
    return out + _trig(space)


def _product(space: ProductSpace) -> list[BatteryFunction]:
    out = []
    for f in battery(space.left):
        for g in battery(space.right):
            body = substitute(f.fn.body, fst(X)) * substitute(g.fn.body, snd(X))
            lf, lg = f.lipschitz, g.lipschitz
            bf, bg = f.fn.bound, g.fn.bound
            lip = _safe(lf * bg) + _safe(bf * lg)
            out.append(BatteryFunction(f"{f.name}*{g.name}", TestFunction(body, space, bf * bg, trusted=True), lip))
    return out


def _safe(v: float) -> float:
    # 0 * inf arises for constant factors on discrete carriers
    return 0.0 if math.isnan(v) else v


@lru_cache(maxsize=128)
def battery(space: SpaceDescriptor) -> Battery:
    """The battery of ``space``."""
    if isinstance(space, (FiniteSet, IntRange)):
        fns = _finite(space)
    elif isinstance(space, RealInterval):
        fns = _interval(space)
    elif isinstance(space, RealLine):
        fns = _line(space)
    elif isinstance(space, ProductSpace):
        fns = _product(space)
    else:
        raise TypeError(f"no battery for {space!r}")
    return Battery(space, tuple(fns))


@dataclass(frozen=True)
class Distance:
    value: float
    function: str
    left: float
    right: float


def battery_distance(mu: Measure, nu: Measure, cfg: IntegrationConfig | None = None) -> Distance:
    """``max_f |mu(f) - nu(f)|`` over the battery of the joined space."""
    space = join_spaces(mu.space, nu.space)
    bat = battery(space)
    h, k = bat.observable(), len(bat)
    a = integrate_observable(mu, h, k, space, cfg)
    b = integrate_observable(nu, h, k, space, cfg)
    diff = np.abs(a - b)
    i = int(np.argmax(diff))
    return Distance(float(diff[i]), bat.functions[i].name, float(a[i]), float(b[i]))


def battery_equal(mu: Measure, nu: Measure, cfg: IntegrationConfig | None = None, tol: float | None = None) -> bool:
    cfg = cfg or IntegrationConfig()
    limit = tol if tol is not None else cfg.tolerance
    return battery_distance(mu, nu, cfg).value <= limit


__all__ = [
    "BATTERY_VERSION",
    "Battery",
    "BatteryFunction",
    "Distance",
    "battery",
    "battery_distance",
    "battery_equal",
]
