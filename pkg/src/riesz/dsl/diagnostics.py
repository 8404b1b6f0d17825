"""Frontend errors carrying source spans, and their JSON form."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import RieszError


@dataclass(frozen=True)
class Span:
    """1-based line/column of the first character and one past the last."""

    line: int
    col: int
    end_line: int
    end_col: int

    def to_json(self) -> dict:
        return {"line": self.line, "col": self.col, "end_line": self.end_line, "end_col": self.end_col}

    def cover(self, other: "Span") -> "Span":
        return Span(self.line, self.col, other.end_line, other.end_col)


class FrontendError(RieszError):
    """Base class of errors reported against a program's source text."""

    code = "FrontendError"

    def __init__(self, message: str, span: Span | None = None):
        super().__init__(message)
        self.span = span

    def to_json(self) -> dict:
        return diagnostic(self.code, self.span, str(self))


class LexError(FrontendError):
    code = "LexError"

    def __init__(self, message: str, span: Span, fragment: str):
        super().__init__(message, span)
        self.fragment = fragment

    @property
    def column(self) -> int:
        return self.span.col


class ParseError(FrontendError):
    code = "ParseError"

    def __init__(self, message: str, span: Span | None, expected: tuple = ()):
        super().__init__(message, span)
        self.expected = tuple(expected)

    def to_json(self) -> dict:
        out = super().to_json()
        out["expected"] = list(self.expected)
        return out


class SpaceError(FrontendError):
    code = "SpaceError"


def diagnostic(code: str, span: Span | None, message: str) -> dict:
    return {"code": code, "span": span.to_json() if span else None, "message": message}


def from_error(exc: RieszError, span: Span | None) -> dict:
    """Diagnostic for any package error, attributed to ``span``."""
    if isinstance(exc, FrontendError):
        return exc.to_json()
    return diagnostic(exc.code, span, str(exc))
