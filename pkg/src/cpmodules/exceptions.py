"""Exception hierarchy."""


class CPModuleError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(CPModuleError, ValueError):
    pass


class NotHermitianError(CPModuleError, ValueError):
    pass


class NotPositiveError(CPModuleError, ValueError):
    pass


class NotCompletelyPositiveError(CPModuleError, ValueError):
    pass


class NotPhiMapError(CPModuleError, ValueError):
    """A module map whose Gram data is not of the form phi(<x, y>)."""


class OrderError(CPModuleError, ValueError):
    """Raised when an operation requires psi <= phi and it does not hold."""


class NotEquivalentError(CPModuleError, ValueError):
    pass


class CommutantError(CPModuleError, ValueError):
    """An operator that was required to lie in a commutant does not."""


class NumericalError(CPModuleError, ArithmeticError):
    """A construction residual exceeded its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message if residual is None else f"{message} (residual {residual:.3e})")
        self.residual = residual
