"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised for invalid parameters, malformed inputs, or mismatched shapes."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver fails to reach its tolerance."""
