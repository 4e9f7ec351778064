"""Exception types shared across the package."""


class CapacityExceededError(ValueError):
    """Raised when a request exceeds an enumeration or finite-difference cap."""


class AmbiguousRootError(ValueError):
    """Raised when a self-consistency equation has several admissible roots."""


class ConvergenceError(RuntimeError):
    """Raised when an iteration fails to converge.

    The visited iterates are kept on ``trajectory`` so callers can inspect them.
    """

    def __init__(self, message, trajectory=()):
        super().__init__(message)
        self.trajectory = list(trajectory)


class NumericFailure(FloatingPointError):
    """Raised when an integrand or derivative produces a non-finite value."""
