"""Exception types raised across the package."""


class ShapeError(ValueError):
    """Inconsistent or invalid matrix dimensions."""


class NotPSDError(ValueError):
    """A matrix that must be positive semidefinite has a negative eigenvalue."""

    def __init__(self, message, eigenvalue):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class NotStableError(ValueError):
    """A matrix that must be Hurwitz is not."""


class ConditioningError(ValueError):
    """A weight matrix is (numerically) singular."""


class UnsolvableError(RuntimeError):
    """No stabilizing Riccati solution could be found."""


class UnstabilizableError(RuntimeError):
    """No stabilizing state feedback exists (or none was found)."""


class DivergedError(RuntimeError):
    """A simulated trajectory became non-finite."""

    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


class NoConvergenceError(RuntimeError):
    """The regularization schedule ended before the Cauchy test passed."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class ConfigError(ValueError):
    """Invalid run configuration; ``key`` names the offending field."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
