"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class RieszError(Exception):
    """Base class for all errors raised by this package."""

    code = "RieszError"

    def to_json(self) -> dict:
        return {"code": self.code, "message": str(self)}


class DomainMismatch(RieszError):
    code = "DomainMismatch"


class SpaceMismatch(RieszError):
    code = "SpaceMismatch"


class NotProduct(RieszError):
    code = "NotProduct"


class NonFinite(RieszError):
    code = "NonFinite"


class UnboundedFunction(RieszError):
    code = "UnboundedFunction"


class DiscontinuousFunction(RieszError):
    code = "DiscontinuousFunction"


class ExpressionError(RieszError):
    """Malformed expression tree or S-expression text."""

    code = "ExpressionError"


class BackendUnsupported(RieszError):
    code = "BackendUnsupported"


class NotProbability(RieszError):
    code = "NotProbability"


class RejectionStall(RieszError):
    code = "RejectionStall"


class NotDeterministicMarginal(RieszError):
    """Precondition signal for the strong-affineness checker, not a law failure."""

    code = "NotDeterministicMarginal"


class SerializationError(RieszError):
    code = "SerializationError"
