"""Exception hierarchy shared by every arfilt module."""


class ArfiltError(Exception):
    """Base class for all errors raised by arfilt."""


class DomainError(ArfiltError, ValueError):
    """Argument outside the domain where the quantity is defined."""


class NonConvergent(ArfiltError, ArithmeticError):
    """Iteration or series did not reach the requested tolerance."""


class NonFinite(ArfiltError, ArithmeticError):
    """A sampled integrand value was NaN or infinite."""


class UnstableInput(ArfiltError, ValueError):
    """The polynomial 1 - s(z_1 + ... + z_d) has a root in the closed polydisk."""


class SingularMatrix(ArfiltError, ArithmeticError):
    pass


class SingularSystem(ArfiltError, ArithmeticError):
    pass


class Underdetermined(ArfiltError, LookupError):
    """Requested coefficient cannot be reached from the known ones."""


class Infeasible(ArfiltError, ValueError):
    """Prescribed (a, b) admit no stable degree one symmetric polynomial."""

    def __init__(self, message, threshold=None):
        super().__init__(message)
        self.threshold = threshold


class NoBracket(ArfiltError, ArithmeticError):
    pass


class NotPositiveDefinite(ArfiltError, ArithmeticError):
    pass


class ResourceLimit(ArfiltError, MemoryError):
    pass


class InternalError(ArfiltError, AssertionError):
    """An invariant that must hold exactly was violated."""
