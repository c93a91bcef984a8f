"""Exception hierarchy shared across the package.

Each class maps to one CLI exit code (see cli.EXIT_CODES).
"""


class SadpError(Exception):
    """Base class for all package errors."""


class ShapeError(SadpError, ValueError):
    """Input arrays have inconsistent or invalid shapes/lengths."""


class DomainError(SadpError, ValueError):
    """A value lies outside its documented domain (e.g. intensity > 1)."""


class NumericError(SadpError, ArithmeticError):
    """Non-finite values where finite ones are required."""


class ParseError(SadpError, ValueError):
    """A serialized artifact (IDX file, kernel file, dump) is malformed."""


class UnsupportedVersionError(ParseError):
    """A serialized artifact declares a version this build cannot read."""


class DataError(SadpError, ValueError):
    """Device-trace or dataset content violates its invariants."""


class FitError(SadpError, RuntimeError):
    """A spline fit could not meet its smoothing budget."""

    def __init__(self, msg, achieved_residual=None):
        super().__init__(msg)
        self.achieved_residual = achieved_residual


class StageError(SadpError, RuntimeError):
    """An experiment stage failed; carries the stage tag."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
