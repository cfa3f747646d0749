"""Exception hierarchy shared by all modules."""


class GameDesignError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(GameDesignError, ValueError):
    pass


class NumericsError(GameDesignError, ArithmeticError):
    pass


class DomainError(GameDesignError, ValueError):
    pass


class SingularMatrixError(GameDesignError, ArithmeticError):
    pass


class InfeasibleTargetError(GameDesignError, ValueError):
    pass


class DesignError(GameDesignError):
    pass


class DivergenceError(GameDesignError, ArithmeticError):
    """A simulated state left the region ``||x|| <= 1e12``."""


class NonConvergenceError(GameDesignError):
    """An iterative method exhausted its iteration budget.

    The last iterate and its residual are kept on the exception so callers
    can inspect how far the run got.
    """

    def __init__(self, message, last_iterate=None, residual=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations


class ConfigError(GameDesignError, ValueError):
    """Unreadable or invalid scenario configuration; ``diagnostics`` lists each problem."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [message])
