"""Exception types shared across the package."""


class McgError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(McgError):
    """A file does not match the expected on-disk format (bad magic, bad header)."""


class IoError(McgError):
    """A file is unreadable or truncated."""


class ParameterError(McgError):
    """An argument violates a documented precondition."""


class SolverError(McgError):
    """The iterative eigensolver failed to converge."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual
