"""Convergence harnesses and built-in families."""

import json
import math

import pytest

from riesz.convergence import (
    FAMILIES,
    FunctionSequence,
    MapSequence,
    MeasureSequence,
    compact_uniform_check,
    monotone_tail,
    parse_indices,
    run_spec,
    strengthened_cmt_check,
    weak_convergence_check,
)
from riesz.errors import DomainMismatch
from riesz.expr import X, param, sin
from riesz.functions import ContinuousMap, TestFunction
from riesz.measures import Dirac, Quadrature, measure_to_json, uniform
from riesz.spaces import RealInterval

UNIT = RealInterval(0.0, 1.0)


def battery_gap_dirac(p, q):
    """Hand-written battery distance of two Diracs on [0, 1]."""
    u = lambda x: 2 * x - 1
    gaps = [abs(u(p) ** k - u(q) ** k) for k in range(1, 9)]
    for j in range(1, 5):
        gaps += [abs(math.sin(j * p) - math.sin(j * q)), abs(math.cos(j * p) - math.cos(j * q))]
    return max(gaps)


def test_dirac_shrink_matches_hand_oracle():
    rep = FAMILIES["dirac_shrink"].check(range(1, 33))
    assert rep.passed
    for n, r in zip(rep.indices, rep.sup_residuals):
        assert r == pytest.approx(battery_gap_dirac(1.0 / n, 0.0), abs=1e-12)
    assert rep.details["within_envelope"]


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_every_family_passes(name):
    rep = FAMILIES[name].check(range(1, 33))
    assert rep.passed, rep.to_json()
    assert rep.details["within_envelope"]


def test_uniform_shrink_closed_form():
    # E_{U(0, 1/n)}[u] - u(0) = 1/n on the degree-1 battery element
    rep = FAMILIES["uniform_shrink"].check([10])
    assert rep.sup_residuals[0] >= 1.0 / 10 - 1e-12


def test_non_convergent_sequence_fails():
    ms = MeasureSequence(lambda n: Dirac(0.25 if n % 2 else 0.75, UNIT), "flip")
    rep = weak_convergence_check(ms, Dirac(0.0, UNIT), range(1, 17))
    assert not rep.passed
    # converging to the wrong limit also fails
    wrong = MeasureSequence(lambda n: Dirac(1.0 / n, UNIT))
    assert not weak_convergence_check(wrong, Dirac(1.0, UNIT), range(1, 33), tol=1e-3).passed


def test_weak_rejects_non_probability_terms():
    ms = MeasureSequence(lambda n: 2.0 * Dirac(0.0, UNIT))
    with pytest.raises(DomainMismatch):
        weak_convergence_check(ms, Dirac(0.0, UNIT), [1])


def test_compact_uniform():
    fs = FunctionSequence(None, 1.0, X * (1.0 / param("n")), UNIT)
    rep = compact_uniform_check(fs, TestFunction(0.0, UNIT), [UNIT], indices=range(1, 65), tol=0.02)
    assert rep.passed
    assert rep.sup_residuals[-1] == pytest.approx(1.0 / 64)
    assert rep.details["bound_certified"]
    # a uniform bound that is too small is not certified
    tight = FunctionSequence(None, 0.5, X * (1.0 / param("n")), UNIT)
    assert not compact_uniform_check(tight, TestFunction(0.0, UNIT), [UNIT], indices=[1, 2], tol=1.0).passed


def test_compact_outside_domain():
    fs = FunctionSequence(lambda n: TestFunction(sin(X), UNIT), 1.0)
    with pytest.raises(DomainMismatch):
        compact_uniform_check(fs, TestFunction(sin(X), UNIT), [RealInterval(0.0, 2.0)])


def test_strengthened_cmt_moves_both():
    two = RealInterval(0.0, 2.0)
    gs = MapSequence(lambda n: ContinuousMap(X + 1.0 / n, UNIT, two))
    g = ContinuousMap(X + 0.0, UNIT, two)
    ms = MeasureSequence(lambda n: Dirac(1.0 / n, UNIT))
    rep = strengthened_cmt_check(gs, g, ms, Dirac(0.0, UNIT), range(1, 65), Quadrature(), tol=0.3)
    assert rep.passed
    assert rep.decreasing


def test_monotone_tail():
    assert monotone_tail([5, 1, 3, 2, 1, 0.5])
    assert not monotone_tail([1, 1, 0.5, 0.6])
    assert monotone_tail([])


def test_parse_indices():
    assert parse_indices("1..4") == [1, 2, 3, 4]
    assert parse_indices("2,4,8") == [2, 4, 8]
    assert parse_indices([3, 5]) == [3, 5]
    for bad in ("0..3", "5..2", "0,1"):
        with pytest.raises(ValueError):
            parse_indices(bad)


def test_run_spec_family_and_terms():
    assert run_spec({"family": "constant", "indices": "1..8"}).passed
    with pytest.raises(KeyError):
        run_spec({"family": "nope"})
    terms = [{"n": n, "measure": measure_to_json(uniform(0, 1.0 / n, UNIT))} for n in range(1, 65)]
    spec = json.loads(json.dumps({"mode": "weak", "terms": terms, "limit": measure_to_json(Dirac(0.0, UNIT)), "tol": 0.15}))
    rep = run_spec(spec)
    assert rep.passed
    assert rep.indices == list(range(1, 65))
    with pytest.raises(KeyError):
        run_spec(spec, indices=[80])


def test_report_json_and_csv():
    rep = FAMILIES["fn_linear"].check(range(1, 5))
    obj = rep.to_json()
    assert obj["mode"] == "compact_uniform" and obj["verdict"] == "pass"
    lines = rep.to_csv().splitlines()
    assert lines[0] == "n,residual" and len(lines) == 5


def test_thread_invariance():
    a = FAMILIES["cmt_square"].check(range(1, 33), threads=1).to_json()
    b = FAMILIES["cmt_square"].check(range(1, 33), threads=4).to_json()
    assert json.dumps(a) == json.dumps(b)
