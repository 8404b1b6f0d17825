"""Law sweeps, witnesses and the strong-affineness checker."""

import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from riesz.errors import NotDeterministicMarginal, NotProbability, NotProduct
from riesz.expr import X, const, cos, exp, fst, snd
from riesz.functions import ContinuousMap, TestFunction
from riesz.generators import FiniteGenerator, IntervalGenerator, ShiftMapGenerator
from riesz.laws import (
    LawReport,
    _sweep,
    affine_instances,
    check_affine_corpus,
    check_fubini,
    check_fubini_sweep,
    check_hexagon,
    check_monad_laws,
    check_naturality,
    check_pullback_strength,
    check_strongly_affine,
    compare,
    correlated_instances,
    replay_witness,
)
from riesz.measures import Dirac, Exact, FiniteWeighted, ProductNode, Pushforward, Quadrature, bernoulli, uniform
from riesz.spaces import FiniteSet, IntRange, ProductSpace, RealInterval

from strategies import probability_on

UNIT = RealInterval(0.0, 1.0)


def test_finite_monad_sweep_exact():
    rep = check_monad_laws(FiniteGenerator(0), 60, Exact())
    assert rep.passed
    assert rep.instances_checked == 60
    assert {p.law_name for p in rep.parts} >= {"left_unit", "right_unit", "associativity"}
    assert rep.max_residual <= 1e-12


def test_interval_monad_sweep_quadrature():
    rep = check_monad_laws(IntervalGenerator(0), 15, Quadrature())
    assert rep.passed, rep.to_json()
    assert rep.max_residual <= 1e-6


@pytest.mark.parametrize("gen", [FiniteGenerator(1), ShiftMapGenerator(1)], ids=["finite", "shift"])
def test_naturality_sweep(gen):
    assert check_naturality(None, gen, 40, Exact()).passed


def test_naturality_with_fixed_map():
    g = ContinuousMap(X * X, UNIT, UNIT)
    rep = check_naturality(g, IntervalGenerator(2), 12, Quadrature())
    assert rep.passed


def test_hexagon_and_fubini_sweeps():
    assert check_hexagon(FiniteGenerator(3), 30, Exact()).passed
    assert check_fubini_sweep(FiniteGenerator(3), 30, Exact()).passed
    assert check_hexagon(IntervalGenerator(3), 8, Quadrature()).passed
    assert check_fubini_sweep(IntervalGenerator(3), 8, Quadrature()).passed


def test_pullback_strength():
    assert check_pullback_strength(FiniteGenerator(4), FiniteGenerator(5), 20, Exact()).passed


def test_fubini_oracle():
    two = RealInterval(0.0, 2.0)
    f = TestFunction(exp(fst(X)) * cos(snd(X)), ProductSpace(UNIT, two))
    rep = check_fubini(uniform(0, 1), uniform(0, 2), f, Quadrature())
    expected = (math.e - 1) * math.sin(2.0) / 2
    assert rep.passed
    a, b = rep.values
    assert a == pytest.approx(expected, abs=1e-12)
    assert b == pytest.approx(expected, abs=1e-12)


def test_sweep_is_thread_invariant():
    a = check_monad_laws(FiniteGenerator(9), 30, Exact()).to_json()
    b = check_monad_laws(FiniteGenerator(9), 30, Exact(), threads=4).to_json()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_broken_law_produces_replayable_witness():
    # a deliberately false "right unit": collapse everything onto one point
    def pairs(inst):
        pt = inst.space.points()[0]
        collapse = ContinuousMap(const(pt), inst.space, inst.space)
        return [("bogus_unit", Pushforward(collapse, inst.mu), inst.mu)]

    rep = _sweep("bogus", FiniteGenerator(0), 40, Exact(), pairs)
    assert rep.failed
    w = rep.witness
    assert w["law"] == "bogus_unit"
    assert w["residual"] == rep.max_residual
    # only the serialized witness is needed to reproduce the gap
    replayed = replay_witness(json.loads(json.dumps(w)))
    assert replayed == pytest.approx(w["residual"], abs=1e-12)


def test_compare_witness_on_intervals():
    rep = compare("shifted", Dirac(0.2, UNIT), Dirac(0.3, UNIT))
    assert rep.failed
    assert replay_witness(rep.witness) == pytest.approx(rep.max_residual, abs=1e-12)


def test_report_merge_is_associative():
    a = LawReport("x", 1, 0.1, 0.5)
    b = LawReport("x", 2, 0.3, 0.5)
    c = LawReport("x", 3, 0.2, 0.5)
    left, right = a.merge(b).merge(c), a.merge(b.merge(c))
    assert left.to_json() == right.to_json()
    assert left.instances_checked == 6 and left.max_residual == 0.3


def test_nan_residual_fails():
    assert LawReport("x", 1, math.nan, 1.0).failed


def test_affine_corpus_passes_and_rejects_controls():
    rep = check_affine_corpus(affine_instances(0, 30))
    assert rep.passed
    assert rep.instances_checked == 30
    assert rep.rejected == 0
    controls = check_affine_corpus(correlated_instances(0, 5))
    assert controls.rejected == 5
    assert controls.instances_checked == 0


def test_affine_preconditions():
    correlated = correlated_instances(0, 1)[0]
    with pytest.raises(NotDeterministicMarginal):
        check_strongly_affine(correlated)
    with pytest.raises(NotProduct):
        check_strongly_affine(bernoulli(0.5))
    with pytest.raises(NotDeterministicMarginal):
        check_strongly_affine(ProductNode(uniform(0, 1), Dirac(0, IntRange(0, 1))))
    half = FiniteWeighted(((("a", 0), 0.5),), ProductSpace(FiniteSet(("a",)), IntRange(0, 1)))
    with pytest.raises(NotProbability):
        check_strongly_affine(half)


def test_affine_report_fields():
    mu = ProductNode(FiniteWeighted((("a", 0.3), ("b", 0.7)), FiniteSet(("a", "b"))), Dirac(1, IntRange(0, 2)))
    rep = check_strongly_affine(mu)
    assert rep.passed
    assert rep.atom == 1
    assert rep.rectangles == 4 * 8
    assert {p.law_name for p in rep.parts} == {"factorization", "phi_surjective", "phi_left_inverse", "phi_second_marginal"}


@given(st.data())
def test_affine_property(data):
    xs = FiniteSet(("p", "q", "r"))
    ys = IntRange(0, 3)
    nu = data.draw(probability_on(xs))
    y = data.draw(st.sampled_from(ys.points()))
    assert check_strongly_affine(ProductNode(nu, Dirac(y, ys))).passed
