"""Exception types shared across the package.

Two broad families matter for callers: input/validation problems
(:class:`ParseError` and friends) and numerical failures during
contraction (:class:`NumericError` and subclasses). The CLI maps the
former to exit code 1 and the latter to exit code 2.
"""


class SolverError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SolverError):
    """Malformed instance text. Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateEntryError(ParseError):
    """The same coupling, field, or table entry was specified twice."""


class InvalidIndexError(SolverError):
    """A spin, site, or state index is out of its valid range."""


class GeometryError(SolverError):
    """An interaction connects sites that are not king-adjacent."""


class DimensionError(SolverError):
    """Mismatched sizes: assignment length, tensor bonds, topology counts."""


class UnsupportedError(SolverError):
    """The requested operation needs data the object does not carry."""


class TooLargeError(SolverError):
    """Exhaustive enumeration was requested beyond the safety guard."""


class NumericError(SolverError):
    """Non-finite values appeared where finite ones are required."""


class DegenerateStateError(NumericError):
    """A boundary state with zero norm cannot be compressed."""


class ContractionDegenerateError(NumericError):
    """All conditional weights underflowed to zero during contraction."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at site {position})"
        super().__init__(message)
        self.position = position
