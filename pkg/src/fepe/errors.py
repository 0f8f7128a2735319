"""Exception types shared across the package."""


class FepeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidPolygon(FepeError):
    """A polygon is malformed: too few points, non-finite or degenerate."""


class ParseError(FepeError):
    """An annotation line could not be parsed.

    Carries the 1-based line number when known.
    """

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class DomainError(FepeError):
    """A numeric input is outside the function's domain."""


class InputError(FepeError):
    """Structurally inconsistent inputs (shape mismatch, unpaired ids)."""


class IoError(FepeError):
    """A file or directory could not be read or written."""
