class SparsifyError(ValueError):
    """Base class for all errors raised by sparsekit."""


class NonFinite(SparsifyError):
    pass


class NegativeNotAllowed(SparsifyError):
    pass


class TrivialInstance(SparsifyError):
    """At most ``m`` nonzero entries: the vector is its own sparsification."""

    def __init__(self, msg, raw=None):
        super().__init__(msg)
        self.raw = raw


class DomainError(SparsifyError):
    pass


class ConvergenceError(SparsifyError, ArithmeticError):
    pass


class BracketError(SparsifyError, ArithmeticError):
    pass


class InfeasibleMarginals(SparsifyError):
    pass


class TooLarge(SparsifyError):
    pass


class SignFlipUnsupported(SparsifyError):
    pass


class FeasibilityNotFound(SparsifyError):
    pass


class NoInteriorIndex(SparsifyError):
    pass
