"""Exception types shared across the package."""


class InputError(ValueError):
    """Caller-supplied data is malformed (bad config, NaN utilities, size mismatch)."""


class DomainError(ValueError):
    """A point lies outside the open domain of the barrier."""


class PreconditionError(InputError):
    """A theorem-level precondition (learning rate, horizon, norm bound) is violated."""


class ConvergenceError(RuntimeError):
    """The proximal solver ran out of iterations.

    Carries the last observed Newton decrement in ``last_decrement``.
    """

    def __init__(self, message: str, last_decrement: float):
        super().__init__(f"{message} (last Newton decrement {last_decrement:.3e})")
        self.last_decrement = last_decrement


class NumericalError(RuntimeError):
    """A linear-algebra step failed to reach its residual target.

    ``matrix`` carries the offending input when applicable.
    """

    def __init__(self, message: str, matrix=None):
        super().__init__(message)
        self.matrix = matrix
