"""Exception types shared across the package."""


class DimensionError(ValueError):
    """An array argument has the wrong rank or incompatible dimensions."""


class ShapeError(ValueError):
    """An array argument violates a structural requirement (e.g. Hermitian)."""


class NumericalError(ArithmeticError):
    """A computation left the numerically trustworthy regime.

    Carries ``min_eigenvalue`` when the failure was a positive-definiteness
    check, so callers can report how close to singular the matrix was.
    """

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class ConvergenceError(RuntimeError):
    """An iterative routine exhausted its iteration budget."""


class InfeasibleError(RuntimeError):
    """A constraint cannot be satisfied by any admissible point."""
