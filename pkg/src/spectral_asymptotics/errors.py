"""Exception hierarchy shared by all analysis modules."""


class SpectralError(Exception):
    """Base class for every error raised by the package."""


class DomainError(SpectralError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UsageError(SpectralError, ValueError):
    """Malformed input that is not a mathematical domain problem (empty grid, bad ordering)."""


class UnsupportedOrderError(SpectralError, ValueError):
    """Derivative order above what the closed-form machinery supports."""


class FitError(SpectralError, ArithmeticError):
    """The regression design is degenerate."""


class DivergenceError(SpectralError, ArithmeticError):
    """A series or integral that the caller asked for does not converge."""


class BudgetError(SpectralError, RuntimeError):
    """An enumeration or truncation budget ran out before a certificate was reached.

    ``best_bound`` carries the best tail bound reached so far (``inf`` when none).
    """

    def __init__(self, message: str, best_bound: float = float("inf")):
        super().__init__(message)
        self.best_bound = best_bound


class ConfigError(SpectralError, ValueError):
    """Invalid command-line or JSON configuration."""
