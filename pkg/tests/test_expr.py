import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from riesz.errors import DiscontinuousFunction, ExpressionError, UnboundedFunction
from riesz.expr import (
    Expr,
    Fin,
    Iv,
    X,
    abstract_of_space,
    bind_params,
    clamp,
    const,
    cos,
    enclose,
    eq,
    evaluate,
    exp,
    from_sexpr,
    fst,
    if_,
    op,
    pair,
    param,
    sin,
    snd,
    to_sexpr,
)
from riesz.spaces import FiniteSet, IntRange, ProductSpace, RealInterval, RealLine


def test_evaluate_arithmetic():
    xs = np.array([0.0, 1.0, 2.0])
    np.testing.assert_allclose(evaluate(X * X + 1, xs), [1.0, 2.0, 5.0])
    np.testing.assert_allclose(evaluate(clamp(X, 0.5, 1.5), xs), [0.5, 1.0, 1.5])
    np.testing.assert_allclose(evaluate(op("min", X, 1.0), xs), [0.0, 1.0, 1.0])


def test_evaluate_pairs_and_conditionals():
    batch = (np.array([1.0, 2.0]), np.array([True, False]))
    np.testing.assert_allclose(evaluate(if_(snd(X), fst(X), -fst(X)), batch), [1.0, -2.0])
    out = evaluate(pair(snd(X), fst(X)), batch)
    assert isinstance(out, tuple)


def test_symbol_equality():
    s = FiniteSet(("a", "b"))
    out = evaluate(eq(X, const("a")), s.to_batch(["a", "b"]))
    assert out.tolist() == [True, False]


def test_enclosure_of_smooth_functions():
    e = enclose(sin(X), abstract_of_space(RealInterval(0.0, math.pi / 2)))
    assert e.lo <= 0.0 and 1.0 <= e.hi <= 1.0
    e = enclose(exp(X), abstract_of_space(RealInterval(0.0, 1.0)))
    assert e.lo <= 1.0 and e.hi >= math.e
    e = enclose(X * X, abstract_of_space(RealInterval(-1.0, 2.0)))
    assert (e.lo, e.hi) == (0.0, 4.0) or e.lo <= 0.0 <= e.hi


def test_unbounded_and_discontinuous_are_detected():
    with pytest.raises(UnboundedFunction):
        enclose(const(1.0) / X, abstract_of_space(RealInterval(-1.0, 1.0)))
    with pytest.raises(DiscontinuousFunction):
        enclose(op("lt", X, 0.5), abstract_of_space(RealInterval(0.0, 1.0)))
    # a comparison decided on the whole domain is fine
    assert enclose(op("lt", X, 2.0), abstract_of_space(RealInterval(0.0, 1.0))) == Fin((True,))
    # and discrete carriers may compare freely
    assert set(enclose(op("lt", X, 2), abstract_of_space(IntRange(0, 3))).values) == {False, True}


def test_enclosure_of_real_line_is_infinite():
    e = enclose(X, abstract_of_space(RealLine()))
    assert isinstance(e, Iv) and math.isinf(e.lo)
    e = enclose(cos(X), abstract_of_space(RealLine()))
    assert (e.lo, e.hi) == (-1.0, 1.0)


def test_params():
    e = X * param("n")
    with pytest.raises(ExpressionError):
        evaluate(e, np.array([1.0]))
    assert evaluate(bind_params(e, {"n": 3.0}), np.array([2.0])).tolist() == [6.0]


def test_arity_is_checked():
    with pytest.raises(ExpressionError):
        Expr("add", (X,))


def test_sexpr_examples():
    assert to_sexpr(X * 2.0 + 1) == "(add (mul x 2.0) 1)"
    assert from_sexpr("(if (eq x \"a\") #t #f)") == if_(eq(X, const("a")), const(True), const(False))
    assert from_sexpr("(pow x 3)") == X**3


leaf = st.one_of(
    st.just(X),
    st.floats(-10, 10, allow_nan=False).map(const),
    st.integers(-5, 5).map(const),
    st.sampled_from(["a", "b c", 'q"uote']).map(const),
    st.booleans().map(const),
)


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from(["add", "mul", "sub", "min", "pair", "eq"]), children, children).map(lambda t: op(t[0], t[1], t[2])),
        st.tuples(st.sampled_from(["neg", "sin", "exp", "fst"]), children).map(lambda t: op(t[0], t[1])),
        st.tuples(children, children, children).map(lambda t: if_(*t)),
        st.tuples(children, st.integers(0, 4)).map(lambda t: Expr("pow", (t[0],), t[1])),
    )


@given(st.recursive(leaf, _extend, max_leaves=12))
def test_sexpr_round_trip(e):
    assert from_sexpr(to_sexpr(e)) == e


@given(st.floats(-3, 3), st.floats(0.1, 3), st.floats(-2, 2))
def test_enclosure_contains_values(a, length, c):
    space = RealInterval(a, a + length)
    e = sin(X) * c + X * X - cos(X * 2.0)
    enc = enclose(e, abstract_of_space(space))
    xs = np.linspace(space.a, space.b, 101)
    vals = evaluate(e, xs)
    assert np.all(vals >= enc.lo - 1e-12) and np.all(vals <= enc.hi + 1e-12)


def test_product_enclosure():
    s = ProductSpace(RealInterval(0, 1), IntRange(1, 3))
    e = enclose(fst(X) * snd(X), abstract_of_space(s))
    assert e.lo == 0.0 and e.hi == 3.0
