"""Tokenizer for ``.rpl`` programs."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import LexError, Span

KEYWORDS = {
    "let", "expect", "check", "of", "fn", "bind", "in", "if", "then", "else",
    "true", "false", "and", "or", "not",
}

PUNCT = {
    "==": "EQEQ", "!=": "NE", "<=": "LE", ">=": "GE",
    "=": "EQ", "<": "LT", ">": "GT", "~": "TILDE", "(": "LPAREN", ")": "RPAREN",
    ",": "COMMA", ";": "SEMI", ":": "COLON", "+": "PLUS", "-": "MINUS",
    "*": "STAR", "/": "SLASH", "^": "CARET",
}

_NUM = re.compile(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_STRING = re.compile(r'"([^"\\\n]|\\.)*"')


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: Span
    value: object = None

    def __repr__(self):
        return f"{self.kind} {self.text}" if self.kind in ("IDENT", "NUM", "STRING") else self.kind


def tokenize(text: str) -> list[Token]:
    """Tokens with 1-based line/column spans; ``#`` comments are dropped."""
    out: list[Token] = []
    i, line, line_start = 0, 1, 0
    n = len(text)
    while i < n:
        c = text[i]
        col = i - line_start + 1
        if c == "\n":
            i += 1
            line, line_start = line + 1, i
            continue
        if c in " \t\r":
            i += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue

        def span(length):
            return Span(line, col, line, col + length)

        m = _NUM.match(text, i)
        if m and (c.isdigit() or (c == "." and m.end() > i + 1)):
            lit = m.group(0)
            is_int = m.group(1).isdigit() and not m.group(2)
            out.append(Token("NUM", lit, span(len(lit)), int(lit) if is_int else float(lit)))
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            word = m.group(0)
            kind = word.upper() if word in KEYWORDS else "IDENT"
            out.append(Token(kind, word, span(len(word)), word))
            i = m.end()
            continue
        if c == '"':
            m = _STRING.match(text, i)
            if not m:
                raise LexError(f"unterminated string at line {line}, column {col}", span(1), text[i : i + 10])
            lit = m.group(0)
            value = re.sub(r"\\(.)", r"\1", lit[1:-1])
            out.append(Token("STRING", lit, span(len(lit)), value))
            i = m.end()
            continue
        two = text[i : i + 2]
        if two in PUNCT:
            out.append(Token(PUNCT[two], two, span(2)))
            i += 2
            continue
        if c in PUNCT:
            out.append(Token(PUNCT[c], c, span(1)))
            i += 1
            continue
        raise LexError(f"unexpected character {c!r} at line {line}, column {col}", span(1), c)
    return out
