"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Bad problem/experiment configuration (file or programmatic)."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class GridError(ValueError):
    """A grid cannot be built for the requested configuration."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (no convergence, solver breakdown)."""
