import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from riesz.errors import DomainMismatch, SerializationError, SpaceMismatch
from riesz.spaces import (
    FiniteSet,
    IntRange,
    ProductSpace,
    RealInterval,
    RealLine,
    join_spaces,
    numeric_bounds,
    space_from_json,
    value_from_json,
    value_to_json,
)

from strategies import finite_spaces

SPACES = [
    FiniteSet(("a", "b")),
    FiniteSet((False, True)),
    FiniteSet((0.0, 0.25)),
    IntRange(-1, 3),
    RealInterval(0.0, 1.0),
    RealLine(),
    ProductSpace(FiniteSet(("a",)), RealInterval(-1.0, 2.0)),
]


@pytest.mark.parametrize("space", SPACES, ids=str)
def test_json_round_trip(space):
    assert space_from_json(space.to_json()) == space


def test_finite_set_is_a_set():
    assert FiniteSet(("a", "b")) == FiniteSet(("b", "a"))
    assert hash(FiniteSet(("a", "b"))) == hash(FiniteSet(("b", "a")))
    # type-strict: 0.0 and False are different points
    assert FiniteSet((0.0,)) != FiniteSet((False,))
    assert FiniteSet((1,)) != FiniteSet((True,))


def test_finite_set_rejects_duplicates_and_empty():
    with pytest.raises(SpaceMismatch):
        FiniteSet(("a", "a"))
    with pytest.raises(SpaceMismatch):
        FiniteSet(())


def test_interval_validation():
    with pytest.raises(SpaceMismatch):
        RealInterval(1.0, 1.0)
    with pytest.raises(SpaceMismatch):
        RealInterval(0.0, math.inf)


def test_membership():
    assert 2 in IntRange(0, 3)
    assert 2.5 not in IntRange(0, 3)
    assert 0.5 in RealInterval(0, 1)
    assert 1.5 not in RealInterval(0, 1)
    assert (False, "a") in ProductSpace(FiniteSet((False, True)), FiniteSet(("a",)))
    with pytest.raises(DomainMismatch):
        RealInterval(0, 1).coerce(2.0)


def test_joins():
    assert join_spaces(IntRange(0, 1), IntRange(3, 4)) == IntRange(0, 4)
    assert join_spaces(FiniteSet((True,)), FiniteSet((False,))) == FiniteSet((False, True))
    assert join_spaces(FiniteSet((False, True)), FiniteSet((True,))).elements == (False, True)
    assert join_spaces(RealInterval(0, 1), RealInterval(2, 3)) == RealInterval(0, 3)
    assert join_spaces(IntRange(0, 1), RealInterval(0.5, 2)) == RealInterval(0, 2)
    assert join_spaces(RealInterval(0, 1), RealLine()) == RealLine()
    with pytest.raises(SpaceMismatch):
        join_spaces(FiniteSet(("a",)), RealInterval(0, 1))


def test_points_and_batches():
    s = ProductSpace(IntRange(0, 1), FiniteSet(("u", "v")))
    pts = s.points()
    assert len(pts) == 4
    assert s.from_batch(s.to_batch(pts)) == pts
    assert numeric_bounds(IntRange(-2, 5)) == (-2.0, 5.0)


def test_value_json_rejects_outside_points():
    with pytest.raises(SerializationError):
        value_from_json(7, IntRange(0, 3))


@given(finite_spaces)
def test_finite_space_round_trips(space):
    assert space_from_json(space.to_json()) == space
    for p in space.points():
        assert value_from_json(value_to_json(p), space) == p
    assert space.from_batch(space.to_batch(space.points())) == space.points()


@given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(-5, 5), st.floats(0.01, 5))
def test_interval_join_contains_both(a, la, b, lb):
    s, t = RealInterval(a, a + la), RealInterval(b, b + lb)
    j = join_spaces(s, t)
    assert s.is_subspace_of(j) and t.is_subspace_of(j)


def test_numpy_scalars_serialize():
    assert value_to_json(np.int64(3)) == 3 and isinstance(value_to_json(np.int64(3)), int)
    assert value_to_json((np.bool_(True), np.float64(0.5))) == [True, 0.5]
