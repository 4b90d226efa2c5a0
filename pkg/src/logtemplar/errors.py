"""Exception types shared across the package."""


class LogTemplarError(Exception):
    """Base class for all package errors."""


class EmptyLogError(LogTemplarError):
    """Raised when a raw log line is blank."""


class EmptyTemplateError(LogTemplarError):
    """Raised when a template string contains no tokens."""


class UnknownTypeError(LogTemplarError):
    """Raised when a placeholder names a type outside the catalog."""

    def __init__(self, type_name: str):
        super().__init__(f"unknown word type: {type_name!r}")
        self.type_name = type_name


class EmptyWordError(LogTemplarError):
    """Raised when asked to embed an empty word."""


class DimensionMismatchError(LogTemplarError):
    """Raised when two vectors of different dimension are compared."""


class ZeroVectorError(LogTemplarError):
    """Raised when cosine is asked for a zero-norm vector."""


class ProviderUnavailableError(LogTemplarError):
    """Raised when an external embedding service cannot be reached."""


class InvalidDeltaError(LogTemplarError):
    """Raised when the representative-set radius is outside (0, 1]."""


class NoProbabilitiesError(LogTemplarError):
    """Raised when a prediction carries no word probabilities."""


class InvalidWordCountsError(LogTemplarError):
    """Raised when the adaptive budget sees an impossible word count."""


class GatewayError(LogTemplarError):
    """Raised when the LLM gateway fails after retries."""


class ResponseParseError(LogTemplarError):
    """Raised when an LLM response violates the two-line output contract."""


class FormatError(LogTemplarError):
    """Raised on malformed corpus files; carries the offending line."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class MissingColumnError(FormatError):
    """Raised when a CSV corpus lacks a required column."""


class NoGroundTruthError(LogTemplarError):
    """Raised when the oracle annotator has no template for a log."""


class UnknownIdError(LogTemplarError):
    """Raised when a log id is not present in the corpus."""


class AnnotatorUnavailableError(LogTemplarError):
    """Raised when the annotator cannot serve a round."""
