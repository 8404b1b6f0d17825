"""Hypothesis strategies shared by the property tests."""

from hypothesis import strategies as st

from riesz.measures import Dirac, FiniteWeighted, Scale, Sum
from riesz.spaces import FiniteSet, IntRange

finite_spaces = st.one_of(
    st.integers(1, 5).map(lambda n: FiniteSet(tuple("abcde"[:n]))),
    st.tuples(st.integers(-3, 3), st.integers(0, 4)).map(lambda t: IntRange(t[0], t[0] + t[1])),
    st.just(FiniteSet((False, True))),
)


@st.composite
def probability_on(draw, space):
    pts = space.points()
    k = draw(st.integers(1, len(pts)))
    chosen = draw(st.permutations(pts))[:k]
    raw = draw(st.lists(st.integers(1, 20), min_size=k, max_size=k))
    total = sum(raw)
    return FiniteWeighted(tuple((p, w / total) for p, w in zip(chosen, raw)), space)


@st.composite
def finite_measure(draw, space=None, depth=2):
    space = space or draw(finite_spaces)
    kind = draw(st.integers(0, 2 if depth > 0 else 1))
    if kind == 0:
        return Dirac(draw(st.sampled_from(space.points())), space)
    if kind == 1:
        return draw(probability_on(space))
    w = draw(st.integers(1, 9)) / 10
    a = draw(finite_measure(space, depth - 1))
    b = draw(finite_measure(space, depth - 1))
    return Sum(Scale(w, a), Scale(1 - w, b))
