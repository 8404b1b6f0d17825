"""Integration engine: closed-form oracles, backends, sampling, JSON."""

import math

import numpy as np
import pytest
from hypothesis import given

from riesz.errors import BackendUnsupported, NotProbability
from riesz.expr import X, cos, exp, fst, if_, sin, snd
from riesz.functions import ContinuousMap, TestFunction
from riesz.kernels import ConstKernel, TableKernel
from riesz.measures import (
    BindNode,
    Density,
    Dirac,
    Exact,
    IntegrationConfig,
    JoinNode,
    Mixture,
    MonteCarlo,
    ProductNode,
    Pushforward,
    Quadrature,
    Scale,
    Sum,
    bernoulli,
    draw,
    finite,
    integrate,
    integrate_with_error,
    is_probability,
    measure_from_json,
    measure_to_json,
    nonnegative,
    sample,
    sample_many,
    total_mass,
    uniform,
    variation_bound,
)
from riesz.battery import battery_distance
from riesz.generators import FiniteGenerator, IntervalGenerator
from riesz.spaces import FiniteSet, IntRange, ProductSpace, RealInterval, RealLine

from strategies import finite_measure

UNIT = RealInterval(0.0, 1.0)


def fn(body, space):
    return TestFunction(body, space)


# frozen oracles: closed forms computed by hand
ORACLES = [
    ("x^2 on U(0,1)", lambda: uniform(0, 1), X * X, 1.0 / 3.0),
    ("exp on U(0,1)", lambda: uniform(0, 1), exp(X), math.e - 1.0),
    ("sin on U(0,pi)", lambda: uniform(0, math.pi), sin(X), 2.0 / math.pi),
    ("x on U(-2,3)", lambda: uniform(-2, 3), X, 0.5),
    ("cos(2x) on U(0,1)", lambda: uniform(0, 1), cos(2.0 * X), math.sin(2.0) / 2.0),
]


@pytest.mark.parametrize("name,make,body,expected", ORACLES, ids=[o[0] for o in ORACLES])
def test_quadrature_oracles(name, make, body, expected):
    mu = make()
    assert integrate(mu, fn(body, mu.space), Quadrature()) == pytest.approx(expected, abs=1e-12)


def test_gauss_legendre_exact_on_high_degree_polynomials():
    mu = uniform(0, 1)
    body = X
    for k in range(2, 41):
        body = body * X
        assert integrate(mu, fn(body, UNIT), Quadrature()) == pytest.approx(1.0 / (k + 1), abs=1e-14)


def test_weighted_density_normalizes():
    # density 1 + x^2 on [0, 1], mass 4/3
    mu = Density(fn(1.0 + X * X, UNIT), 0.75, UNIT)
    assert total_mass(mu, Quadrature()) == pytest.approx(1.0, abs=1e-13)
    # int x (1 + x^2) * 3/4 = 3/4 * (1/2 + 1/4)
    assert integrate(mu, fn(X, UNIT), Quadrature()) == pytest.approx(9.0 / 16.0, abs=1e-13)


def test_finite_exact():
    mu = finite([(1, 0.25), (2, 0.25), (3, 0.5)], IntRange(1, 3))
    assert integrate(mu, fn(X * X, mu.space), Exact()) == pytest.approx(0.25 + 1.0 + 4.5, abs=1e-15)
    heads = TestFunction(if_(X, 1.0, 0.0), FiniteSet((False, True)))
    assert integrate(bernoulli(0.3), heads, Exact()) == pytest.approx(0.3)


def test_dirac_evaluates():
    mu = Dirac(0.7, UNIT)
    assert integrate(mu, fn(X * X, UNIT), Exact()) == pytest.approx(0.49, abs=1e-15)


def test_product_expectation():
    space = ProductSpace(UNIT, UNIT)
    mu = ProductNode(uniform(0, 1), uniform(0, 1))
    assert integrate(mu, fn(fst(X) * snd(X), space), Quadrature()) == pytest.approx(0.25, abs=1e-13)
    # asymmetric observable, both orders agree with the closed form
    f = fn(exp(fst(X)) * cos(snd(X)), ProductSpace(UNIT, RealInterval(0.0, 2.0)))
    mu = ProductNode(uniform(0, 1), uniform(0, 2))
    assert integrate(mu, f, Quadrature()) == pytest.approx((math.e - 1) * math.sin(2.0) / 2.0, abs=1e-12)


def test_pushforward_changes_variables():
    g = ContinuousMap(X * X, UNIT, UNIT)
    mu = Pushforward(g, uniform(0, 1))
    # E[U^2] = 1/3 and E[U^4] = 1/5
    assert integrate(mu, fn(X, UNIT), Quadrature()) == pytest.approx(1 / 3, abs=1e-13)
    assert integrate(mu, fn(X * X, UNIT), Quadrature()) == pytest.approx(1 / 5, abs=1e-13)


def test_join_averages():
    pi = Mixture(((Dirac(0.0, UNIT), 0.5), (uniform(0, 1), 0.5)))
    mu = JoinNode(pi)
    assert integrate(mu, fn(X, UNIT), Quadrature()) == pytest.approx(0.25, abs=1e-14)


def test_bind_with_table_and_const():
    b = FiniteSet((False, True))
    table = TableKernel(b, ((False, Dirac(0, IntRange(0, 2))), (True, finite([(1, 0.5), (2, 0.5)], IntRange(0, 2)))))
    mu = BindNode(bernoulli(0.5), table)
    assert integrate(mu, fn(X, IntRange(0, 2)), Exact()) == pytest.approx(0.75, abs=1e-15)
    const = BindNode(bernoulli(0.2), ConstKernel(b, uniform(0, 1)))
    assert integrate(const, fn(X, UNIT), Quadrature()) == pytest.approx(0.5, abs=1e-14)


def test_auto_backend_picks_exact_or_quadrature():
    assert integrate(bernoulli(0.5), TestFunction(1.0, FiniteSet((False, True)))) == 1.0
    assert integrate(uniform(0, 1), fn(X * X, UNIT)) == pytest.approx(1 / 3, abs=1e-13)


def test_exact_rejects_density():
    with pytest.raises(BackendUnsupported):
        integrate(uniform(0, 1), fn(X, UNIT), Exact())


def test_monte_carlo_within_tolerance():
    cfg = MonteCarlo(40_000)
    value, stderr = integrate_with_error(uniform(0, 1), fn(X * X, UNIT), cfg)
    assert abs(value - 1 / 3) <= cfg.tolerance
    assert 0 < stderr < 0.01
    assert abs(value - 1 / 3) < 5 * stderr


def test_monte_carlo_reproducible_and_thread_invariant():
    mu = Sum(Scale(0.5, uniform(0, 1)), Scale(0.5, Pushforward(ContinuousMap(X * X, UNIT, UNIT), uniform(0, 1))))
    f = fn(sin(3.0 * X), UNIT)
    a = integrate(mu, f, MonteCarlo(10_000, seed=7))
    b = integrate(mu, f, MonteCarlo(10_000, seed=7, threads=4))
    c = integrate(mu, f, MonteCarlo(10_000, seed=8))
    assert a == b
    assert a != c


def test_draw_blocks_do_not_depend_on_threads():
    mu = uniform(-1, 1)
    assert np.array_equal(draw(mu, 10_000, seed=3), draw(mu, 10_000, seed=3, threads=3))


def test_sampling():
    assert sample(Dirac(0.25, UNIT)) == 0.25
    xs = sample_many(uniform(2, 3), 500, seed=1)
    assert all(2 <= x <= 3 for x in xs)
    pts = sample_many(bernoulli(1.0), 20)
    assert pts == [True] * 20
    with pytest.raises(NotProbability):
        sample(Scale(2.0, uniform(0, 1)))


def test_rejection_sampler_matches_density_mean():
    mu = Density(fn(1.0 + X * X, UNIT), 0.75, UNIT)
    xs = np.asarray(sample_many(mu, 20_000, seed=5))
    assert abs(xs.mean() - 9 / 16) < 4 * xs.std() / math.sqrt(len(xs))


def test_signed_measures():
    mu = Sum(uniform(0, 1), Scale(-0.5, Dirac(0.5, UNIT)))
    assert not nonnegative(mu)
    assert not is_probability(mu)
    assert variation_bound(mu) == pytest.approx(1.5)
    assert total_mass(mu, Quadrature()) == pytest.approx(0.5, abs=1e-14)


def test_density_on_line_embeds():
    mu = uniform(0, 1, RealLine())
    assert mu.space == RealLine()
    assert integrate(mu, fn(cos(X), RealLine()), Quadrature()) == pytest.approx(math.sin(1.0), abs=1e-13)


def test_config_parse_and_labels():
    assert IntegrationConfig.parse("exact").label() == "exact"
    assert IntegrationConfig.parse("quad:32").order == 32
    assert IntegrationConfig.parse("mc:2500").tolerance == pytest.approx(0.08)
    with pytest.raises(ValueError):
        IntegrationConfig.parse("simpson")
    with pytest.raises(ValueError):
        IntegrationConfig(seed=-1)


@given(finite_measure())
def test_finite_json_round_trip(mu):
    back = measure_from_json(measure_to_json(mu))
    assert back == mu
    assert battery_distance(mu, back, Exact()).value == 0.0


@pytest.mark.parametrize("gen", [FiniteGenerator(11), IntervalGenerator(11)], ids=["finite", "interval"])
def test_generated_trees_round_trip(gen):
    for trial in range(25):
        inst = gen.instance(trial)
        for mu in (inst.mu, inst.other):
            back = measure_from_json(measure_to_json(mu))
            assert battery_distance(mu, back).value <= 1e-12
