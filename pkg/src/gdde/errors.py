"""Exception types raised across the package."""


class GddeError(Exception):
    """Base class for library errors."""


class DimensionError(GddeError, ValueError):
    """Vector length does not match the expected dimensionality."""


class InsufficientDataError(GddeError, ValueError):
    """Not enough evaluated points for the requested operation."""


class IllConditionedError(GddeError, ValueError):
    """A kernel system is singular or has duplicate centers."""


class DegenerateFoldError(GddeError, ValueError):
    """A leave-one-out fold removed the last member of a class."""


class BudgetExhausted(GddeError, RuntimeError):
    """The objective was called after its evaluation budget ran out."""


class ConfigError(GddeError, ValueError):
    """Invalid experiment or case configuration."""


class SolverError(GddeError, RuntimeError):
    """The reservoir pressure or transport solve failed."""


class ComparisonError(GddeError, ValueError):
    """Result sets cannot be compared (budgets or seeds differ)."""
