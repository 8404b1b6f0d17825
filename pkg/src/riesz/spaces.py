"""Sample-space descriptors and points.

Points are plain Python values: ``float`` for reals, ``int`` for integers,
``bool``, ``str`` for symbols and 2-tuples for pairs.  A space decides
membership and converts between lists of points and the columnar *batches*
used for vectorised evaluation (numpy arrays, or tuples of batches for
product spaces).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import DomainMismatch, SerializationError, SpaceMismatch

Value = Any


def is_real(x) -> bool:
    return isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, (bool, np.bool_))


def _atom_kind(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "bool"
    if isinstance(x, str):
        return "symbol"
    if is_real(x):
        return "number"
    raise DomainMismatch(f"not an atomic value: {x!r}")


def same_atom(a, b) -> bool:
    try:
        return _atom_kind(a) == _atom_kind(b) and a == b
    except DomainMismatch:
        return False


class SpaceDescriptor:
    """Base class of the five space kinds."""

    def coerce(self, x) -> Value:
        """Return the canonical form of ``x`` or raise ``DomainMismatch``."""
        raise NotImplementedError

    def contains(self, x) -> bool:
        try:
            self.coerce(x)
        except DomainMismatch:
            return False
        return True

    def __contains__(self, x) -> bool:
        return self.contains(x)

    @property
    def is_finite(self) -> bool:
        return False

    def points(self) -> list:
        raise DomainMismatch(f"{self} has no finite carrier")

    def to_batch(self, points: Sequence) -> Any:
        raise NotImplementedError

    def from_batch(self, batch) -> list:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def is_subspace_of(self, other: "SpaceDescriptor") -> bool:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class FiniteSet(SpaceDescriptor):
    elements: tuple

    # a set: order-insensitive, and type-strict so {0.0} and {False} differ
    def _key(self):
        return frozenset((_atom_kind(e), e) for e in self.elements)

    def __eq__(self, other):
        return isinstance(other, FiniteSet) and self._key() == other._key()

    def __hash__(self):
        return hash(("FiniteSet", self._key()))

    def __post_init__(self):
        elems = tuple(self.elements)
        if not elems:
            raise SpaceMismatch("FiniteSet needs at least one element")
        for i, e in enumerate(elems):
            _atom_kind(e)
            if any(same_atom(e, f) for f in elems[:i]):
                raise SpaceMismatch(f"duplicate element {e!r} in FiniteSet")
        object.__setattr__(self, "elements", elems)

    def coerce(self, x):
        for e in self.elements:
            if same_atom(e, x):
                return e
        raise DomainMismatch(f"{x!r} is not in {self}")

    @property
    def is_finite(self) -> bool:
        return True

    def points(self) -> list:
        return list(self.elements)

    @property
    def kind(self) -> str:
        kinds = {_atom_kind(e) for e in self.elements}
        return kinds.pop() if len(kinds) == 1 else "mixed"

    def to_batch(self, points):
        kind = self.kind
        if kind == "bool":
            return np.array([bool(p) for p in points], dtype=bool)
        if kind == "number":
            return np.array([float(p) for p in points], dtype=float)
        out = np.empty(len(points), dtype=object)
        out[:] = list(points)
        return out

    def from_batch(self, batch) -> list:
        return [self.coerce(v.item() if hasattr(v, "item") else v) for v in batch]

    def to_json(self):
        return {"kind": "finite", "elements": list(self.elements)}

    def is_subspace_of(self, other):
        return all(other.contains(e) for e in self.elements)

    def __str__(self):
        return "{" + ", ".join(format_value(e) for e in self.elements) + "}"


@dataclass(frozen=True)
class IntRange(SpaceDescriptor):
    lo: int
    hi: int

    def __post_init__(self):
        if not (isinstance(self.lo, int) and isinstance(self.hi, int)) or self.lo > self.hi:
            raise SpaceMismatch(f"bad IntRange({self.lo}, {self.hi})")

    def coerce(self, x):
        if is_real(x) and math.isfinite(x) and float(x).is_integer() and self.lo <= x <= self.hi:
            return int(x)
        raise DomainMismatch(f"{x!r} is not in {self}")

    @property
    def is_finite(self) -> bool:
        return True

    def points(self) -> list:
        return list(range(self.lo, self.hi + 1))

    def to_batch(self, points):
        return np.array([float(p) for p in points], dtype=float)

    def from_batch(self, batch) -> list:
        return [self.coerce(float(v)) for v in batch]

    def to_json(self):
        return {"kind": "int_range", "lo": self.lo, "hi": self.hi}

    def is_subspace_of(self, other):
        if isinstance(other, IntRange):
            return other.lo <= self.lo and self.hi <= other.hi
        if isinstance(other, (RealInterval, RealLine)):
            return other.contains(float(self.lo)) and other.contains(float(self.hi))
        if isinstance(other, FiniteSet):
            return all(other.contains(p) for p in self.points())
        return False

    def __str__(self):
        return f"[{self.lo}..{self.hi}]"


class _RealSpace(SpaceDescriptor):
    def to_batch(self, points):
        return np.array([float(p) for p in points], dtype=float)

    def from_batch(self, batch) -> list:
        return [self.coerce(float(v)) for v in batch]


@dataclass(frozen=True)
class RealInterval(_RealSpace):
    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
            raise SpaceMismatch(f"RealInterval needs finite a < b, got ({self.a}, {self.b})")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def coerce(self, x):
        if is_real(x) and self.a <= x <= self.b:
            return float(x)
        raise DomainMismatch(f"{x!r} is not in {self}")

    @property
    def length(self) -> float:
        return self.b - self.a

    def to_json(self):
        return {"kind": "interval", "a": self.a, "b": self.b}

    def is_subspace_of(self, other):
        if isinstance(other, RealLine):
            return True
        if isinstance(other, RealInterval):
            return other.a <= self.a and self.b <= other.b
        return False

    def __str__(self):
        return f"[{format_value(self.a)}, {format_value(self.b)}]"


@dataclass(frozen=True)
class RealLine(_RealSpace):
    def coerce(self, x):
        if is_real(x) and math.isfinite(x):
            return float(x)
        raise DomainMismatch(f"{x!r} is not a finite real")

    def to_json(self):
        return {"kind": "real_line"}

    def is_subspace_of(self, other):
        return isinstance(other, RealLine)

    def __str__(self):
        return "R"


@dataclass(frozen=True)
class ProductSpace(SpaceDescriptor):
    left: SpaceDescriptor
    right: SpaceDescriptor

    def coerce(self, x):
        if not (isinstance(x, tuple) and len(x) == 2):
            raise DomainMismatch(f"{x!r} is not a pair in {self}")
        return (self.left.coerce(x[0]), self.right.coerce(x[1]))

    @property
    def is_finite(self) -> bool:
        return self.left.is_finite and self.right.is_finite

    def points(self) -> list:
        return [(x, y) for x in self.left.points() for y in self.right.points()]

    def to_batch(self, points):
        points = list(points)
        return (self.left.to_batch([p[0] for p in points]), self.right.to_batch([p[1] for p in points]))

    def from_batch(self, batch) -> list:
        return list(zip(self.left.from_batch(batch[0]), self.right.from_batch(batch[1])))

    def to_json(self):
        return {"kind": "product", "left": self.left.to_json(), "right": self.right.to_json()}

    def is_subspace_of(self, other):
        return (
            isinstance(other, ProductSpace)
            and self.left.is_subspace_of(other.left)
            and self.right.is_subspace_of(other.right)
        )

    def __str__(self):
        return f"({self.left} x {self.right})"


def batch_len(batch) -> int:
    while isinstance(batch, tuple):
        batch = batch[0]
    return len(batch)


def batch_take(batch, idx):
    if isinstance(batch, tuple):
        return tuple(batch_take(b, idx) for b in batch)
    return batch[idx]


def batch_concat(batches: Sequence):
    if isinstance(batches[0], tuple):
        return tuple(batch_concat([b[i] for b in batches]) for i in range(len(batches[0])))
    return np.concatenate(batches)


def batch_repeat(batch, n: int):
    """Repeat every element ``n`` times consecutively."""
    if isinstance(batch, tuple):
        return tuple(batch_repeat(b, n) for b in batch)
    return np.repeat(batch, n)


def batch_tile(batch, n: int):
    """Tile the whole batch ``n`` times."""
    if isinstance(batch, tuple):
        return tuple(batch_tile(b, n) for b in batch)
    return np.tile(batch, n)


def space_from_json(obj: dict) -> SpaceDescriptor:
    try:
        kind = obj["kind"]
        if kind == "finite":
            return FiniteSet(tuple(obj["elements"]))
        if kind == "int_range":
            return IntRange(int(obj["lo"]), int(obj["hi"]))
        if kind == "interval":
            return RealInterval(obj["a"], obj["b"])
        if kind == "real_line":
            return RealLine()
        if kind == "product":
            return ProductSpace(space_from_json(obj["left"]), space_from_json(obj["right"]))
    except (KeyError, TypeError) as exc:
        raise SerializationError(f"malformed space: {obj!r}") from exc
    raise SerializationError(f"unknown space kind {obj.get('kind')!r}")


def value_to_json(x):
    if isinstance(x, tuple):
        return [value_to_json(x[0]), value_to_json(x[1])]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def value_from_json(obj, space: SpaceDescriptor):
    if isinstance(space, ProductSpace):
        if not (isinstance(obj, list) and len(obj) == 2):
            raise SerializationError(f"expected a pair for {space}, got {obj!r}")
        return (value_from_json(obj[0], space.left), value_from_json(obj[1], space.right))
    try:
        return space.coerce(obj)
    except DomainMismatch as exc:
        raise SerializationError(str(exc)) from exc


def format_value(x) -> str:
    if isinstance(x, tuple):
        return f"({format_value(x[0])}, {format_value(x[1])})"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, str):
        return repr(x)
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _hull(lo1, hi1, lo2, hi2):
    return min(lo1, lo2), max(hi1, hi2)


def join_spaces(s: SpaceDescriptor, t: SpaceDescriptor) -> SpaceDescriptor:
    """Smallest descriptor of the supported kinds containing both spaces."""
    if s == t:
        return s
    if s.is_subspace_of(t):
        return t
    if t.is_subspace_of(s):
        return s
    if isinstance(s, ProductSpace) and isinstance(t, ProductSpace):
        return ProductSpace(join_spaces(s.left, t.left), join_spaces(s.right, t.right))
    if isinstance(s, RealLine) or isinstance(t, RealLine):
        if _numeric(s) and _numeric(t):
            return RealLine()
        raise SpaceMismatch(f"cannot join {s} and {t}")
    if isinstance(s, IntRange) and isinstance(t, IntRange):
        return IntRange(min(s.lo, t.lo), max(s.hi, t.hi))
    if isinstance(s, FiniteSet) and isinstance(t, FiniteSet):
        if s.kind == t.kind == "number" and all(float(e).is_integer() for e in s.elements + t.elements):
            lo, hi = _hull(*_bounds(s), *_bounds(t))
            return IntRange(int(lo), int(hi))
        if {s.kind, t.kind} <= {"bool", "symbol", "mixed"} or s.kind == t.kind:
            merged = list(s.elements) + [e for e in t.elements if not s.contains(e)]
            if s.kind != "number":
                return FiniteSet(_canonical(merged))
    if _numeric(s) and _numeric(t):
        lo, hi = _hull(*_bounds(s), *_bounds(t))
        if all(_integral(x) for x in (s, t)):
            return IntRange(int(lo), int(hi))
        if lo < hi:
            return RealInterval(lo, hi)
    raise SpaceMismatch(f"cannot join {s} and {t}")


def _canonical(elements) -> tuple:
    """Booleans in the order (False, True); other elements keep their order."""
    if all(isinstance(e, bool) for e in elements):
        return tuple(v for v in (False, True) if v in elements)
    return tuple(elements)


def _numeric(s) -> bool:
    if isinstance(s, (IntRange, RealInterval, RealLine)):
        return True
    return isinstance(s, FiniteSet) and s.kind == "number"


def _integral(s) -> bool:
    if isinstance(s, IntRange):
        return True
    return isinstance(s, FiniteSet) and s.kind == "number" and all(float(e).is_integer() for e in s.elements)


def _bounds(s) -> tuple[float, float]:
    if isinstance(s, IntRange):
        return float(s.lo), float(s.hi)
    if isinstance(s, RealInterval):
        return s.a, s.b
    if isinstance(s, FiniteSet):
        vals = [float(e) for e in s.elements]
        return min(vals), max(vals)
    return -math.inf, math.inf


def numeric_bounds(s: SpaceDescriptor) -> tuple[float, float]:
    """Enclosing real interval of a numeric space."""
    if not _numeric(s):
        raise DomainMismatch(f"{s} is not numeric")
    return _bounds(s)


def check_points(space: SpaceDescriptor, points: Iterable) -> list:
    return [space.coerce(p) for p in points]
