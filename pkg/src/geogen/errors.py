"""Exception hierarchy shared by every geogen subsystem."""

from __future__ import annotations


class GeoError(Exception):
    """Base class for all geogen errors."""

    code = "GeoError"

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


# -- formal language ---------------------------------------------------------

class GeoSyntaxError(GeoError, SyntaxError):
    code = "SyntaxError"

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownPredicate(GeoError):
    code = "UnknownPredicate"


class ArityMismatch(GeoError):
    code = "ArityMismatch"


class MalformedEntity(GeoError):
    code = "MalformedEntity"


class SlotKindMismatch(GeoError):
    code = "SlotKindMismatch"


class DanglingReference(GeoError):
    code = "DanglingReference"


class DuplicateName(GeoError):
    code = "DuplicateName"


class NonPolynomial(GeoError):
    """Expression cannot be expanded into a polynomial over its symbols."""

    code = "NonPolynomial"


class NotExact(GeoError):
    """Exact arithmetic would leave the supported radical field."""

    code = "NotExact"


# -- deduction ---------------------------------------------------------------

class UnknownTheorem(GeoError):
    code = "UnknownTheorem"


class InvalidBinding(GeoError):
    code = "InvalidBinding"


class InconsistentSystem(GeoError):
    code = "InconsistentSystem"


class LimitExceeded(GeoError):
    code = "LimitExceeded"

    def __init__(self, message: str, graph=None):
        super().__init__(message)
        self.graph = graph


class UnknownTarget(GeoError):
    code = "UnknownTarget"


class CyclicSubgraph(GeoError):
    code = "CyclicSubgraph"


# -- plotter / targets -------------------------------------------------------

class NoCompatibleRelation(GeoError):
    code = "NoCompatibleRelation"


class MissingConstraintTemplate(GeoError):
    code = "MissingConstraintTemplate"


class UnsatisfiedAfterRetries(GeoError):
    code = "UnsatisfiedAfterRetries"

    def __init__(self, message: str, diagnostics: list | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class NoEligibleTarget(GeoError):
    code = "NoEligibleTarget"


# -- qa / verifier / gateway -------------------------------------------------

class MissingTemplate(GeoError):
    code = "MissingTemplate"


class TranslationFailed(GeoError):
    code = "TranslationFailed"


class GeneratorError(GeoError):
    code = "GeneratorError"


class GatewayError(GeoError):
    code = "GatewayError"


class AuthError(GatewayError):
    code = "AuthError"


class TransientError(GatewayError):
    code = "TransientError"


class RetryExhausted(GatewayError):
    code = "RetryExhausted"


class GatewayTimeout(GatewayError):
    code = "TimeoutError"


class ScriptFormatError(GeoError):
    code = "ScriptFormatError"
