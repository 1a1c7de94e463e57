"""Exception types raised across the package."""


class PinnLabError(Exception):
    """Base class for all errors raised by pinnlab."""


class DivisionByZero(PinnLabError, ZeroDivisionError):
    pass


class DimensionOutOfRange(PinnLabError, ValueError):
    pass


class ShapeMismatch(PinnLabError, ValueError):
    pass


class RejectionBudgetExceeded(PinnLabError, RuntimeError):
    pass


class EmptyGroup(PinnLabError, ValueError):
    pass


class NonFiniteGradient(PinnLabError, FloatingPointError):
    pass


class NonFiniteLoss(PinnLabError, FloatingPointError):
    """Training diverged; ``epoch`` records where."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class GroupCountMismatch(PinnLabError, ValueError):
    pass


class DegenerateGradient(PinnLabError, FloatingPointError):
    pass


class ZeroMomentum(PinnLabError, ValueError):
    pass


class NonConvergence(PinnLabError, RuntimeError):
    pass


class QuadratureUnderflow(PinnLabError, FloatingPointError):
    pass


class CoincidentPoints(PinnLabError, ValueError):
    pass


class ZeroReference(PinnLabError, ValueError):
    pass


class ConfigError(PinnLabError, ValueError):
    pass
