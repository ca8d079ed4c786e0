"""Exception hierarchy shared by all fringeprobe modules."""


class FringeprobeError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(FringeprobeError, ValueError):
    """Invalid experiment configuration or unparseable config file."""


class DomainError(FringeprobeError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class NonConvergence(FringeprobeError, RuntimeError):
    """An iterative or adaptive routine exhausted its budget.

    ``partial`` carries the best available result (if any) so callers can
    still report it.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class SingularJacobian(FringeprobeError, RuntimeError):
    """Normal equations of a least-squares problem are rank deficient."""


class InsufficientData(FringeprobeError, ValueError):
    """Too few data points for the requested fit."""


class DegenerateDenominator(FringeprobeError, ArithmeticError):
    """A ratio's denominator vanished or changed sign."""


class ScanFormatError(FringeprobeError, ValueError):
    """A scan CSV file could not be parsed."""
