"""Exception hierarchy shared by every module."""


class RecMarkovError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(RecMarkovError, ValueError):
    """An argument violates an operation's precondition (shape, range, sum)."""


class CapacityError(RecMarkovError):
    """A dense materialization would exceed the configured entry cap."""


class DomainError(RecMarkovError, ValueError):
    """A closed-form expression is undefined for the given parameters."""


class NonConvergenceError(RecMarkovError):
    """An iterative solver exhausted its budget.

    The last iterate and its residual are kept so callers can inspect how
    far the solver got.
    """

    def __init__(self, message, iterate=None, residual=None, iterations=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual
        self.iterations = iterations
