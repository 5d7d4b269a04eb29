"""Exception hierarchy shared across the package."""


class HpcaError(Exception):
    """Base class for all package errors."""


class ParseError(HpcaError):
    """Malformed libsvm input; carries the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionError(HpcaError):
    """Shapes or declared dimensions do not agree."""


class StreamError(HpcaError):
    """I/O failure mid-stream; carries the byte offset reached."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"at byte {offset}: {message}"
        super().__init__(message)


class RankDeficientError(HpcaError):
    """A column became numerically dependent during orthonormalization."""


class AsymmetricError(HpcaError):
    """Input to the symmetric eigensolver is not symmetric."""


class NoConvergenceError(HpcaError):
    """Jacobi sweeps exhausted without reaching the off-diagonal tolerance."""


class GuardError(HpcaError):
    """A desk-scale size guard was exceeded; names the guard."""


class ModelFormatError(HpcaError):
    """Model file is malformed or has an unknown version."""
