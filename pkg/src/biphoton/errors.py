"""Exception types raised by the biphoton package."""


class BiphotonError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(BiphotonError, ValueError):
    """Argument outside the domain where a model is defined."""


class DataFileError(BiphotonError, ValueError):
    """Malformed record in a dispersion data file."""


class PhaseMatchingError(BiphotonError):
    """No collinear degenerate type-I phase matching exists."""


class EvanescentError(BiphotonError, ValueError):
    """Transverse wavenumber exceeds the full wavenumber."""


class ValidityError(BiphotonError):
    """The delta-function approximation does not hold for a scenario."""


class NumericalError(BiphotonError, ArithmeticError):
    """A numerical procedure failed to converge."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ResolutionError(NumericalError):
    """The integrand oscillates too fast for the allowed panel budget."""


class NoPeakError(BiphotonError):
    """A curve has no interior maximum."""


class TruncationError(BiphotonError):
    """A half-height crossing lies outside the sampled axis."""


class ConfigError(BiphotonError, ValueError):
    """Invalid run configuration."""
