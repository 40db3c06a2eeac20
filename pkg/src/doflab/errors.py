class DofLabError(Exception):
    """Base class for library errors."""


class DomainError(DofLabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConfigError(DofLabError, ValueError):
    """Invalid or unsatisfiable configuration."""


class BudgetExceeded(DofLabError, RuntimeError):
    """Enumeration would exceed the configured size budget."""


class RegionError(DofLabError, ValueError):
    """Halfspace system is empty or unbounded."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind
