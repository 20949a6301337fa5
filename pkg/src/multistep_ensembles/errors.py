"""Exception and warning types raised across the package."""


class EnsembleError(Exception):
    """Base class for all package errors."""


class FormatError(EnsembleError, ValueError):
    pass


class ParseError(EnsembleError, ValueError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class IntegrityError(EnsembleError, ValueError):
    pass


class InsufficientLengthError(EnsembleError, ValueError):
    """A series (or segment) is too short for the requested operation."""

    def __init__(self, message, required=None, actual=None):
        super().__init__(message)
        self.required = required
        self.actual = actual


class InsufficientDataError(EnsembleError, ValueError):
    pass


class ConfigError(EnsembleError, ValueError):
    pass


class ShapeError(EnsembleError, ValueError):
    pass


class NumericError(EnsembleError, ValueError):
    pass


class CompletenessError(EnsembleError, ValueError):
    pass


class UndefinedBaselineError(EnsembleError, ZeroDivisionError):
    pass


class RankWarning(UserWarning):
    """Design matrix is degenerate; the model fell back to intercept-only."""


class ColdStartWarning(UserWarning):
    pass
