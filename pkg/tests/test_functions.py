import math

import numpy as np
import pytest

from riesz.errors import DomainMismatch, ExpressionError, UnboundedFunction
from riesz.expr import X, clamp, const, exp, fst, if_, eq, sin, snd
from riesz.functions import ContinuousMap, TestFunction, compose_fn, constant, projection, swap_map
from riesz.spaces import FiniteSet, IntRange, ProductSpace, RealInterval, RealLine


def test_bound_is_certified_by_interval_analysis():
    f = TestFunction(X * X, RealInterval(-2.0, 1.0))
    assert f.bound >= 4.0
    assert TestFunction(sin(X), RealLine()).bound == 1.0


def test_unbounded_observable_is_rejected():
    with pytest.raises(UnboundedFunction):
        TestFunction(exp(X), RealLine())
    with pytest.raises(UnboundedFunction):
        TestFunction(X, RealLine())


def test_declared_bound_is_checked():
    TestFunction(X * (1.0 - X), RealInterval(0, 1), 0.25)
    with pytest.raises(UnboundedFunction):
        TestFunction(X, RealInterval(0, 1), 0.5)


def test_test_functions_must_be_real_valued():
    with pytest.raises(ExpressionError):
        TestFunction(eq(X, const("a")), FiniteSet(("a", "b")))


def test_evaluation_and_algebra():
    f = TestFunction(X, RealInterval(0, 2))
    g = constant(1.0, RealInterval(0, 2))
    assert (f + g)(1.5) == 2.5
    assert (f * g)(1.5) == 1.5
    np.testing.assert_allclose(f.values(np.array([0.0, 2.0])), [0.0, 2.0])


def test_map_codomain_inference():
    m = ContinuousMap(X + 1, IntRange(0, 2))
    assert m.codomain == IntRange(1, 3) or set(m.codomain.points()) == {1, 2, 3}
    m = ContinuousMap(clamp(X * 2.0, 0.0, 1.0), RealInterval(0, 1))
    assert m.codomain.is_subspace_of(RealInterval(0, 1)) or m.codomain == RealInterval(0, 1)
    swap = if_(eq(X, const("a")), const("b"), const("a"))
    s = FiniteSet(("a", "b"))
    assert ContinuousMap(swap, s, s)("a") == "b"


def test_map_declared_codomain_is_checked():
    with pytest.raises(DomainMismatch):
        ContinuousMap(X + 1, IntRange(0, 2), IntRange(0, 2))
    with pytest.raises(DomainMismatch):
        ContinuousMap(X * 2.0, RealInterval(0, 1), RealInterval(0, 1))


def test_composition_and_projections():
    p = ProductSpace(RealInterval(0, 1), IntRange(0, 2))
    f = TestFunction(X * X, RealInterval(0, 1))
    pulled = compose_fn(f, projection(p, 1))
    assert pulled((0.5, 2)) == 0.25
    assert swap_map(p)((0.5, 2)) == (2, 0.5)
    g = ContinuousMap(X * 0.5, RealInterval(0, 1)).then(ContinuousMap(X + 1.0, RealInterval(0, 0.5)))
    assert g(1.0) == 1.5


def test_json_round_trip():
    f = TestFunction(sin(fst(X)) * snd(X), ProductSpace(RealInterval(0, 1), IntRange(0, 3)))
    assert TestFunction.from_json(f.to_json()) == f
    m = ContinuousMap(X * X, RealInterval(-1, 1))
    assert ContinuousMap.from_json(m.to_json()) == m


def test_nonfinite_values_are_errors():
    f = TestFunction(const(1.0), RealInterval(0, 1))
    assert math.isfinite(f(0.5))
