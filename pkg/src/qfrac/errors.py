"""Exception hierarchy.

Every error carries the module and operation that raised it so the command
line front end can report a machine-readable failure object.
"""


class QCalcError(Exception):
    """Base class for all computational errors in this package."""

    module = "qfrac"

    def __init__(self, message, *, operation=None, module=None):
        super().__init__(message)
        self.operation = operation
        if module is not None:
            self.module = module

    def to_dict(self):
        return {
            "error": type(self).__name__,
            "module": self.module,
            "operation": self.operation,
            "message": str(self),
        }


class PoleError(QCalcError):
    pass


class DivisionByZeroProduct(QCalcError):
    pass


class OutsideRadius(QCalcError):
    pass


class AccelerationFailed(QCalcError):
    pass


class InvalidTranslation(QCalcError):
    pass


class ZeroPoint(QCalcError):
    pass


class NonAbsolutelyConvergent(QCalcError):
    pass


class TruncationError(QCalcError):
    """Raised when a caller demands a converged value and only a truncated one exists."""


class DenominatorUnderflow(QCalcError):
    pass


class InsufficientGrid(QCalcError):
    pass


class NoBasis(QCalcError):
    pass


class ModeDiverged(QCalcError):
    pass


class ConfigError(QCalcError):
    module = "cli"


class IoError(QCalcError):
    module = "cli"
