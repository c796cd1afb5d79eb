"""Exception types shared across the package."""


class SubstreamError(Exception):
    """Base class for all errors raised by this package."""


class UnknownElementError(SubstreamError, KeyError):
    """An element id is not part of the oracle's ground set."""


class ParameterError(SubstreamError, ValueError):
    """A numeric parameter is outside its valid range."""


class ParseError(SubstreamError, ValueError):
    """An input document is malformed.

    Carries the 1-based line number when one is known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class GuardExceeded(SubstreamError, ValueError):
    """A brute-force operation was refused because the instance is too large."""


class DocumentError(SubstreamError, ValueError):
    """A serialized artifact failed version or checksum validation."""
