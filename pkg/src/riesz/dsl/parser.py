"""Recursive-descent parser for ``.rpl`` programs.

program := { stmt }
stmt    := "let" ID "=" mexpr ";" | "expect" fnlit "of" mexpr ";"
         | "check" ID "(" arg { "," arg } ")" ";"
mexpr   := "dirac" "(" sexpr ")" | "uniform" "(" num "," num ")"
         | "bernoulli" "(" NUM ")" | "categorical" "(" lit ":" NUM { "," lit ":" NUM } ")"
         | "bind" ID "~" mexpr "in" mexpr | "map" "(" fnlit "," mexpr ")"
         | "prod" "(" mexpr "," mexpr ")" | "widen" "(" mexpr ")"
         | "if" sexpr "then" mexpr "else" mexpr | "(" mexpr ")" | ID
fnlit   := "fn" "(" ID ")" "=" sexpr

Scalar precedence, loosest first: if, or, and, not, comparisons (non
associative), + -, * /, unary -, ^ with an integer exponent.
"""

from __future__ import annotations

from .ast import (
    BernoulliE,
    Binary,
    BindE,
    Bool,
    Call,
    CategoricalE,
    Check,
    DiracE,
    Expect,
    FnLit,
    IfM,
    IfS,
    Let,
    MapE,
    MVar,
    Num,
    Pow,
    ProdE,
    Program,
    Str,
    Unary,
    UniformE,
    Var,
    WidenE,
)
from .diagnostics import ParseError, Span
from .lexer import Token, tokenize

SCALAR_CALLS = {"fst": 1, "snd": 1, "exp": 1, "sin": 1, "cos": 1, "abs": 1, "min": 2, "max": 2, "clamp": 3, "pair": 2}
MEASURE_FORMS = ("dirac", "uniform", "bernoulli", "categorical", "map", "prod", "widen")
COMPARE = {"LT": "lt", "LE": "le", "GT": "gt", "GE": "ge", "EQEQ": "eq", "NE": "ne"}


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # -- token helpers --------------------------------------------------------

    def peek(self, offset: int = 0) -> Token | None:
        j = self.i + offset
        return self.tokens[j] if j < len(self.tokens) else None

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t is not None and t.kind == kind and (text is None or t.text == text)

    def _end_span(self) -> Span | None:
        if not self.tokens:
            return Span(1, 1, 1, 1)
        last = self.tokens[-1].span
        return Span(last.end_line, last.end_col, last.end_line, last.end_col)

    def fail(self, expected, what: str | None = None):
        t = self.peek()
        expected = tuple(expected) if not isinstance(expected, str) else (expected,)
        found = f"{t.text!r}" if t else "end of input"
        if what:
            msg = f"expected {what}, found {found}"
        else:
            msg = f"expected {' or '.join(expected)}, found {found}"
        where = t.span if t else self._end_span()
        raise ParseError(f"{msg} at line {where.line}, column {where.col}", where, expected)

    def expect(self, kind: str, what: str | None = None, text: str | None = None) -> Token:
        if not self.at(kind, text):
            self.fail((text or kind,), what)
        t = self.tokens[self.i]
        self.i += 1
        return t

    def ident(self, what: str) -> Token:
        return self.expect("IDENT", what)

    # -- statements -----------------------------------------------------------

    def program(self) -> Program:
        stmts = []
        while self.peek() is not None:
            stmts.append(self.statement())
        span = self.tokens[0].span.cover(self.tokens[-1].span) if self.tokens else None
        return Program(tuple(stmts), span)

    def statement(self):
        t = self.peek()
        if t.kind == "LET":
            self.i += 1
            name = self.ident("IDENT after let")
            self.expect("EQ", "'=' after the bound name")
            m = self.mexpr()
            end = self.expect("SEMI", "';' after the statement")
            return Let(name.text, m, t.span.cover(end.span))
        if t.kind == "EXPECT":
            self.i += 1
            fn = self.fnlit()
            self.expect("OF", "'of' after the observable")
            m = self.mexpr()
            end = self.expect("SEMI", "';' after the statement")
            return Expect(fn, m, t.span.cover(end.span))
        if t.kind == "CHECK":
            self.i += 1
            law = self.ident("a law name after check")
            self.expect("LPAREN", "'(' after the law name")
            args = [self.arg()]
            while self.at("COMMA"):
                self.i += 1
                args.append(self.arg())
            self.expect("RPAREN", "')' closing the arguments")
            end = self.expect("SEMI", "';' after the statement")
            return Check(law.text, tuple(args), t.span.cover(end.span))
        self.fail(("let", "expect", "check"))

    def arg(self):
        return self.fnlit() if self.at("FN") else self.mexpr()

    def fnlit(self) -> FnLit:
        start = self.expect("FN", "'fn'")
        self.expect("LPAREN", "'(' after fn")
        param = self.ident("IDENT naming the parameter")
        self.expect("RPAREN", "')' after the parameter")
        self.expect("EQ", "'=' before the function body")
        body = self.sexpr()
        return FnLit(param.text, body, start.span.cover(body.span))

    # -- measure expressions ----------------------------------------------------

    def mexpr(self):
        t = self.peek()
        if t is None:
            self.fail(("measure expression",), "a measure expression")
        if t.kind == "BIND":
            self.i += 1
            name = self.ident("IDENT after bind")
            self.expect("TILDE", "'~' after the bound name")
            source = self.mexpr()
            self.expect("IN", "'in' before the bind body")
            body = self.mexpr()
            return BindE(name.text, source, body, t.span.cover(body.span))
        if t.kind == "IF":
            self.i += 1
            cond = self.sexpr()
            self.expect("THEN", "'then'")
            a = self.mexpr()
            self.expect("ELSE", "'else'")
            b = self.mexpr()
            return IfM(cond, a, b, t.span.cover(b.span))
        if t.kind == "LPAREN":
            self.i += 1
            m = self.mexpr()
            self.expect("RPAREN", "')'")
            return m
        if t.kind == "IDENT" and t.text in MEASURE_FORMS and self.peek(1) is not None and self.peek(1).kind == "LPAREN":
            self.i += 2
            m = getattr(self, "_" + t.text)(t)
            end = self.expect("RPAREN", f"')' closing {t.text}")
            return _respan(m, t.span.cover(end.span))
        if t.kind == "IDENT":
            self.i += 1
            return MVar(t.text, t.span)
        self.fail(("measure expression",), "a measure expression")

    def _dirac(self, t):
        return DiracE(self.sexpr())

    def _number(self, what: str) -> float:
        neg = False
        if self.at("MINUS"):
            self.i += 1
            neg = True
        tok = self.expect("NUM", what)
        return -tok.value if neg else tok.value

    def _uniform(self, t):
        a = self._number("a number (lower end)")
        self.expect("COMMA", "','")
        b = self._number("a number (upper end)")
        return UniformE(a, b)

    def _bernoulli(self, t):
        return BernoulliE(self.expect("NUM", "a probability").value)

    def _literal(self):
        t = self.peek()
        if t is not None and t.kind in ("NUM", "MINUS"):
            return self._number("a number")
        if t is not None and t.kind in ("TRUE", "FALSE"):
            self.i += 1
            return t.kind == "TRUE"
        if t is not None and t.kind in ("STRING", "IDENT"):
            # bare identifiers name symbols, same as strings
            self.i += 1
            return t.value
        self.fail(("NUM", "STRING", "true", "false", "IDENT"), "a literal")

    def _categorical(self, t):
        items = []
        while True:
            lit = self._literal()
            self.expect("COLON", "':' between literal and weight")
            w = self.expect("NUM", "a weight").value
            items.append((lit, w))
            if not self.at("COMMA"):
                break
            self.i += 1
        return CategoricalE(tuple(items))

    def _map(self, t):
        fn = self.fnlit()
        self.expect("COMMA", "','")
        return MapE(fn, self.mexpr())

    def _prod(self, t):
        a = self.mexpr()
        self.expect("COMMA", "','")
        return ProdE(a, self.mexpr())

    def _widen(self, t):
        return WidenE(self.mexpr())

    # -- scalar expressions -----------------------------------------------------

    def sexpr(self):
        t = self.peek()
        if t is not None and t.kind == "IF":
            self.i += 1
            cond = self.sexpr()
            self.expect("THEN", "'then'")
            a = self.sexpr()
            self.expect("ELSE", "'else'")
            b = self.sexpr()
            return IfS(cond, a, b, t.span.cover(b.span))
        return self._or()

    def _or(self):
        e = self._and()
        while self.at("OR"):
            self.i += 1
            r = self._and()
            e = Binary("or", e, r, e.span.cover(r.span))
        return e

    def _and(self):
        e = self._not()
        while self.at("AND"):
            self.i += 1
            r = self._not()
            e = Binary("and", e, r, e.span.cover(r.span))
        return e

    def _not(self):
        if self.at("NOT"):
            t = self.tokens[self.i]
            self.i += 1
            a = self._not()
            return Unary("not", a, t.span.cover(a.span))
        return self._cmp()

    def _cmp(self):
        e = self._add()
        t = self.peek()
        if t is not None and t.kind in COMPARE:
            self.i += 1
            r = self._add()
            e = Binary(COMPARE[t.kind], e, r, e.span.cover(r.span))
            if self.peek() is not None and self.peek().kind in COMPARE:
                self.fail(("an operator other than a comparison",), "comparisons not to be chained")
        return e

    def _add(self):
        e = self._mul()
        while self.at("PLUS") or self.at("MINUS"):
            op = "add" if self.peek().kind == "PLUS" else "sub"
            self.i += 1
            r = self._mul()
            e = Binary(op, e, r, e.span.cover(r.span))
        return e

    def _mul(self):
        e = self._unary()
        while self.at("STAR") or self.at("SLASH"):
            op = "mul" if self.peek().kind == "STAR" else "div"
            self.i += 1
            r = self._unary()
            e = Binary(op, e, r, e.span.cover(r.span))
        return e

    def _unary(self):
        if self.at("MINUS"):
            t = self.tokens[self.i]
            self.i += 1
            a = self._unary()
            return Unary("neg", a, t.span.cover(a.span))
        return self._pow()

    def _pow(self):
        e = self._atom()
        if self.at("CARET"):
            self.i += 1
            k = self.expect("NUM", "an integer exponent")
            if not isinstance(k.value, int):
                raise ParseError(f"exponent must be an integer at line {k.span.line}, column {k.span.col}", k.span, ("integer",))
            e = Pow(e, k.value, e.span.cover(k.span))
        return e

    def _atom(self):
        t = self.peek()
        if t is None:
            self.fail(("expression",), "an expression")
        if t.kind == "NUM":
            self.i += 1
            return Num(t.value, t.span)
        if t.kind == "STRING":
            self.i += 1
            return Str(t.value, t.span)
        if t.kind in ("TRUE", "FALSE"):
            self.i += 1
            return Bool(t.kind == "TRUE", t.span)
        if t.kind == "LPAREN":
            self.i += 1
            e = self.sexpr()
            self.expect("RPAREN", "')'")
            return e
        if t.kind == "IDENT":
            self.i += 1
            if self.at("LPAREN"):
                if t.text not in SCALAR_CALLS:
                    raise ParseError(f"unknown function {t.text!r} at line {t.span.line}, column {t.span.col}", t.span, tuple(SCALAR_CALLS))
                self.i += 1
                args = [self.sexpr()]
                while self.at("COMMA"):
                    self.i += 1
                    args.append(self.sexpr())
                end = self.expect("RPAREN", f"')' closing {t.text}")
                if len(args) != SCALAR_CALLS[t.text]:
                    raise ParseError(
                        f"{t.text} takes {SCALAR_CALLS[t.text]} argument(s), got {len(args)} at line {t.span.line}, column {t.span.col}",
                        t.span,
                        (),
                    )
                return Call(t.text, tuple(args), t.span.cover(end.span))
            return Var(t.text, t.span)
        self.fail(("NUM", "IDENT", "STRING", "true", "false", "("), "an expression")


def _respan(node, span):
    from dataclasses import replace

    return replace(node, span=span)


def parse(tokens_or_text) -> Program:
    """Parse a token list (or source text) into a :class:`Program`."""
    tokens = tokenize(tokens_or_text) if isinstance(tokens_or_text, str) else list(tokens_or_text)
    return Parser(tokens).program()


def parse_mexpr(text: str):
    p = Parser(tokenize(text))
    m = p.mexpr()
    if p.peek() is not None:
        p.fail(("end of input",))
    return m


def parse_sexpr(text: str):
    p = Parser(tokenize(text))
    e = p.sexpr()
    if p.peek() is not None:
        p.fail(("end of input",))
    return e
