"""Exception hierarchy.

Two families: ``ValidationError`` for bad inputs or configuration (CLI exit
status 1) and ``NumericalError`` for computations that cannot produce a result
(CLI exit status 2).
"""


class NVMagError(Exception):
    """Base class for all package errors."""


class ValidationError(NVMagError, ValueError):
    """Input, parameter or configuration is invalid."""


class InvalidParameterError(ValidationError):
    pass


class TruncationError(ValidationError):
    """Sideband expansion truncated below the modulation index."""


class ResolutionError(ValidationError):
    """Time discretisation too coarse."""


class NoPhysicalRootError(ValidationError):
    pass


class InvalidMeasurementError(ValidationError):
    pass


class NegativeConcentrationError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class NumericalError(NVMagError, ArithmeticError):
    """A well-formed computation failed to produce a usable result."""


class DegenerateModelError(NumericalError):
    pass


class NotFoundError(NumericalError):
    pass


class FitError(NumericalError):
    """Least-squares fit did not converge.

    ``diagnostics`` carries the optimizer state (status, message, nfev, last
    parameter vector) for inspection.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class UndefinedSensitivityError(NumericalError):
    pass
