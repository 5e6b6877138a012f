"""Exception types raised across the package."""


class QSBOError(Exception):
    """Base class for all package errors."""


class InvalidInputError(QSBOError, ValueError):
    """An argument violates a documented precondition."""


class NumericalError(QSBOError, ArithmeticError):
    """A factorization failed even after jitter escalation."""


class DegenerateDataError(QSBOError, ValueError):
    """A statistical test is undefined for the supplied data."""


class RunError(QSBOError, RuntimeError):
    """An optimization run aborted.

    ``partial`` holds the trajectory collected before the failure, as a
    :class:`~qsbo.optimizer.RunResult`, when one is available.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class EvaluationError(RunError):
    """The objective returned a non-finite value."""
