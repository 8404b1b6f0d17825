"""The .rpl frontend: tokens, parsing, inference, evaluation, printing."""

import math
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from riesz.battery import battery_distance
from riesz.dsl import (
    LexError,
    ParseError,
    SpaceError,
    evaluate,
    format_source,
    infer_spaces,
    parse,
    parse_mexpr,
    print_mexpr,
    print_program,
    print_sexpr,
    run_source,
    tokenize,
)
from riesz.dsl import ast as A
from riesz.dsl.evaluate import DslKernel, fresh, subst
from riesz.dsl.parser import parse_sexpr
from riesz.measures import Exact, IntegrationConfig, Quadrature, measure_from_json, measure_to_json
from riesz.spaces import FiniteSet, IntRange, ProductSpace, RealInterval, RealLine


def value_of(text, cfg=None, index=-1):
    rep = run_source(text, cfg)
    assert rep.exit_code == 0, rep.to_json()
    return rep.evaluation.results[index].value


# tokens


def test_tokenize_kinds_and_columns():
    toks = tokenize("let m = bind x ~ uniform(0, 1) in dirac(x * x); # tail")
    kinds = [t.kind for t in toks if t.kind != "EOF"]
    assert kinds[:5] == ["LET", "IDENT", "EQ", "BIND", "IDENT"]
    assert "TILDE" in kinds and kinds[-1] == "SEMI"
    assert toks[1].span.col == 5
    assert all(t.text != "#" for t in toks)


def test_tokenize_numbers_and_strings():
    toks = tokenize('3 2.5 1e-3 "a\\"b" <= != ==')
    assert [t.value for t in toks[:4]] == [3, 2.5, 1e-3, 'a"b']
    assert isinstance(toks[0].value, int)
    assert [t.kind for t in toks[4:7]] == ["LE", "NE", "EQEQ"]


def test_lex_error_column():
    with pytest.raises(LexError) as info:
        tokenize("let x = @;")
    assert info.value.column == 9
    assert info.value.span.line == 1


# parsing


def test_parse_statements():
    prog = parse("let m = bernoulli(0.5); expect fn(b) = if b then 1 else 0 of m; check monad_right(m);")
    assert [type(s).__name__ for s in prog.statements] == ["Let", "Expect", "Check"]
    assert prog.statements[2].law == "monad_right"


def test_precedence():
    e = parse_sexpr("1 + 2 * x ^ 2")
    assert isinstance(e, A.Binary) and e.op == "add"
    assert isinstance(e.right, A.Binary) and e.right.op == "mul"
    assert isinstance(e.right.right, A.Pow) and e.right.right.k == 2
    assert print_sexpr(parse_sexpr("(1 - 2) - 3")) == "1 - 2 - 3"
    assert print_sexpr(parse_sexpr("1 - (2 - 3)")) == "1 - (2 - 3)"
    assert print_sexpr(parse_sexpr("-x ^ 2")) == "-x^2"


def test_parse_error_expected_set():
    with pytest.raises(ParseError) as info:
        parse("let m = bind in;")
    assert list(info.value.expected) == ["IDENT"]
    assert info.value.span.col == 14


def test_comparisons_do_not_chain():
    with pytest.raises(ParseError):
        parse_sexpr("1 < 2 < 3")


def test_parse_measure_forms():
    for text in [
        "dirac(1)",
        "uniform(-1, 2.5)",
        "bernoulli(0.25)",
        'categorical("a": 0.5, b: 0.5)',
        "categorical(-1: 0.5, 2: 0.5)",
        "map(fn(x) = x * x, uniform(0, 1))",
        "prod(m, dirac(true))",
        "bind x ~ m in (if x then dirac(1) else dirac(2))",
        "widen(uniform(0, 1))",
    ]:
        m = parse_mexpr(text)
        assert parse_mexpr(print_mexpr(m)) == m


# inference


def test_inferred_spaces():
    prog = parse(
        "let c = categorical(1: 0.5, 3: 0.5);"
        "let b = bernoulli(0.2);"
        'let s = categorical("a": 0.5, "b": 0.5);'
        "let u = map(fn(x) = x ^ 2, uniform(-1, 2));"
        "let v = map(fn(x) = x * x, uniform(-1, 2));"
        "let p = prod(c, b);"
        "let w = widen(uniform(0, 1));"
    )
    j = infer_spaces(prog)
    spaces = {s.name: j.lets[s.name] for s in prog.statements}
    assert spaces["c"] == IntRange(1, 3)
    assert spaces["b"] == FiniteSet((False, True))
    assert spaces["s"] == FiniteSet(("a", "b"))
    assert spaces["u"] == RealInterval(0.0, 4.0)
    # interval arithmetic does not see that both factors are the same x
    assert spaces["v"] == RealInterval(-2.0, 4.0)
    assert spaces["p"] == ProductSpace(IntRange(1, 3), FiniteSet((False, True)))
    assert spaces["w"] == RealLine()


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("let m = categorical(0: 0.5, 1: 0.4);", "sum to"),
        ("let m = uniform(1, 0);", "uniform needs"),
        ("let m = bernoulli(1.5);", "outside"),
        ("expect fn(x) = x of nope;", "unbound measure"),
        ("let m = dirac(1); let m = dirac(2);", "already defined"),
        ("check monad_left(bernoulli(0.5));", "monad_left takes"),
        ("check wobble(dirac(1));", "unknown law"),
        ("expect fn(x) = y of dirac(1);", "unbound variable"),
        ("let m = bind x ~ uniform(0, 1) in if x then dirac(1) else dirac(0);", "boolean"),
    ],
)
def test_inference_errors(text, fragment):
    with pytest.raises(SpaceError) as info:
        infer_spaces(parse(text))
    assert fragment in str(info.value)
    assert info.value.span is not None


def test_unbounded_observable_is_diagnosed():
    rep = run_source("expect fn(x) = exp(x) of widen(uniform(0, 1));")
    assert rep.exit_code == 2
    assert rep.diagnostics[0]["code"] == "UnboundedFunction"


# evaluation


def test_worked_examples():
    assert value_of("let m = bind b ~ bernoulli(0.5) in if b then dirac(1) else categorical(0: 0.5, 1: 0.5); expect fn(x) = x of m;") == 0.75
    assert value_of("expect fn(p) = fst(p) * snd(p) of prod(uniform(0, 1), uniform(0, 1));") == pytest.approx(0.25, abs=1e-12)
    assert value_of("expect fn(x) = x of dirac(0.7);") == pytest.approx(0.7)
    assert value_of("expect fn(x) = x of bind b ~ bernoulli(0.5) in if b then dirac(1) else dirac(0);") == 0.5


def test_dice_oracle():
    text = "let d = categorical(1: 0.25, 2: 0.25, 3: 0.25, 4: 0.25); let t = bind a ~ d in bind b ~ d in dirac(a + b);"
    assert value_of(text + "expect fn(s) = s of t;") == 5.0
    assert value_of(text + "expect fn(s) = if s == 8 then 1 else 0 of t;") == 0.0625


def test_interval_oracles():
    assert value_of("expect fn(y) = y of bind x ~ uniform(0, 1) in dirac(x * x);") == pytest.approx(1 / 3, abs=1e-12)
    assert value_of("expect fn(x) = exp(x) of uniform(0, 1);") == pytest.approx(math.e - 1, abs=1e-12)
    fub = "expect fn(p) = exp(fst(p)) * cos(snd(p)) of prod(uniform(0, 1), uniform(0, 2));"
    assert value_of(fub) == pytest.approx((math.e - 1) * math.sin(2) / 2, abs=1e-12)


def test_substitution_semantics():
    # bind x ~ dirac(v) in B denotes B[v/x]
    lhs = value_of("expect fn(y) = y of bind x ~ dirac(0.3) in map(fn(z) = z * x, uniform(0, 1));")
    assert lhs == pytest.approx(0.15, abs=1e-12)
    b = parse_mexpr("bind x ~ dirac(0.3) in map(fn(z) = z * x, uniform(0, 1))")
    direct = subst(b.body, b.name, b.source.arg)
    assert print_mexpr(direct) == "map(fn(z) = z * 0.3, uniform(0, 1))"
    # substitution does not capture under a binder of the same name
    shadow = parse_mexpr("bind x ~ uniform(0, 1) in dirac(x)")
    assert subst(shadow, "x", A.Num(5)) == shadow


def test_fresh_avoids_names():
    m = parse_mexpr("bind v0_ ~ dirac(1) in dirac(v0_)")
    assert fresh(m) != "v0_"


def test_bind_dirac_identities_as_battery_equality():
    for src in ["bernoulli(0.3)", "uniform(0, 2)", "categorical(1: 0.5, 4: 0.5)"]:
        rep = run_source(f"let m = {src}; check monad_right(m); check equal(bind v ~ m in dirac(v), m);")
        assert rep.exit_code == 0
        assert all(r.verdict == "pass" for r in rep.evaluation.results)


def test_failed_check_exits_one():
    rep = run_source("check equal(bernoulli(0.5), bernoulli(0.6));")
    assert rep.exit_code == 1
    assert rep.evaluation.results[0].report.witness is not None


def test_affine_rejection_is_not_failure():
    rep = run_source("check affine(prod(bernoulli(0.5), bernoulli(0.5)));")
    assert rep.exit_code == 0
    assert rep.evaluation.results[0].verdict == "rejected"


def test_exact_backend_on_density_exits_three():
    rep = run_source("expect fn(x) = x of uniform(0, 1);", IntegrationConfig.parse("exact"))
    assert rep.exit_code == 3
    assert rep.diagnostics[0]["code"] == "BackendUnsupported"


def test_monte_carlo_reports_stderr():
    res = run_source("expect fn(x) = x of uniform(0, 1);", IntegrationConfig.parse("mc:20000")).evaluation.results[0]
    assert res.stderr > 0
    assert abs(res.value - 0.5) <= 4 / math.sqrt(20000)


def test_empty_program():
    rep = run_source("# nothing here\n")
    assert rep.exit_code == 0
    assert rep.evaluation.results == []


def test_dsl_kernel_round_trip():
    ev = evaluate(parse("let n = uniform(0, 1); let m = bind b ~ bernoulli(0.5) in if b then n else dirac(0.5);"))
    mu = ev.measures["m"]
    assert isinstance(mu.kernel, DslKernel)
    back = measure_from_json(measure_to_json(mu))
    assert battery_distance(mu, back, Quadrature()).value == 0.0


# the corpus and the printer


def test_corpus_is_large_and_runs(corpus):
    programs = sorted(Path(corpus).glob("*.rpl"))
    assert len(programs) >= 25
    for path in programs:
        rep = run_source(path.read_text())
        assert rep.exit_code == 0, (path.name, rep.to_json())


def test_corpus_round_trip(corpus):
    for path in sorted(Path(corpus).glob("*.rpl")):
        prog = parse(path.read_text())
        printed = print_program(prog)
        assert parse(printed) == prog, path.name
        assert format_source(printed) == printed


IDENTS = st.sampled_from(["x", "y", "z", "w1", "acc"])
NUMS = st.one_of(st.integers(0, 1000), st.sampled_from([0.5, 0.25, 1.5, 2.0, 1e-3, 12.75]))


def scalars():
    leaves = st.one_of(NUMS.map(A.Num), IDENTS.map(A.Var), st.booleans().map(A.Bool), st.sampled_from(["a", "q r"]).map(A.Str))

    def extend(inner):
        return st.one_of(
            st.tuples(st.sampled_from(sorted(A.PREC)), inner, inner).map(lambda t: A.Binary(*t)),
            st.tuples(st.sampled_from(["neg", "not"]), inner).map(lambda t: A.Unary(*t)),
            st.tuples(inner, st.integers(0, 5)).map(lambda t: A.Pow(*t)),
            st.tuples(st.sampled_from(["fst", "snd", "exp", "sin", "cos", "abs"]), inner).map(lambda t: A.Call(t[0], (t[1],))),
            st.tuples(st.sampled_from(["min", "max", "pair"]), inner, inner).map(lambda t: A.Call(t[0], (t[1], t[2]))),
            st.tuples(inner, inner, inner).map(lambda t: A.IfS(*t)),
        )

    return st.recursive(leaves, extend, max_leaves=12)


def measures():
    literal = st.one_of(st.integers(-5, 5), st.booleans(), st.sampled_from(["a", "b"]))
    leaves = st.one_of(
        scalars().map(A.DiracE),
        st.tuples(st.integers(-3, 0), st.integers(1, 3)).map(lambda t: A.UniformE(float(t[0]), float(t[1]))),
        st.sampled_from([0.0, 0.25, 1.0]).map(A.BernoulliE),
        st.lists(literal, min_size=1, max_size=3, unique=True).map(lambda vs: A.CategoricalE(tuple((v, 0.5) for v in vs))),
        st.sampled_from(["m", "nu"]).map(A.MVar),
    )

    def extend(inner):
        return st.one_of(
            st.tuples(IDENTS, inner, inner).map(lambda t: A.BindE(*t)),
            st.tuples(IDENTS, scalars(), inner).map(lambda t: A.MapE(A.FnLit(t[0], t[1]), t[2])),
            st.tuples(inner, inner).map(lambda t: A.ProdE(*t)),
            st.tuples(scalars(), inner, inner).map(lambda t: A.IfM(*t)),
            inner.map(A.WidenE),
        )

    return st.recursive(leaves, extend, max_leaves=6)


@given(scalars())
def test_scalar_print_parse_round_trip(e):
    assert parse_sexpr(print_sexpr(e)) == e


@given(measures())
def test_measure_print_parse_round_trip(m):
    assert parse_mexpr(print_mexpr(m)) == m


@given(st.lists(st.tuples(st.sampled_from(["m", "nu", "k"]), measures()), max_size=3))
def test_program_round_trip(lets):
    prog = A.Program(tuple(A.Let(n, m) for n, m in lets))
    assert parse(print_program(prog)) == prog
