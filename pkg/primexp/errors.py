"""Exception hierarchy shared by the library, the CLI and the service."""


class PrimexpError(Exception):
    """Base class for all errors raised by primexp."""

    exit_code = 1


class DomainError(PrimexpError, ValueError):
    """An argument lies outside the documented range of an operation."""

    exit_code = 2


class SieveRangeError(DomainError):
    pass


class GcdError(DomainError):
    pass


class ConfigError(DomainError):
    pass


class EnumerationBudgetError(DomainError):
    pass


class InfeasiblePlanError(DomainError):
    """The head-length condition or beta > 0 fails; both sides are kept for reporting."""

    def __init__(self, message, lhs=None, rhs=None):
        super().__init__(message)
        self.lhs = lhs
        self.rhs = rhs


class PrecisionError(PrimexpError, ArithmeticError):
    exit_code = 3


class ClassificationError(PrimexpError):
    pass


class EmitError(PrimexpError, OSError):
    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path
