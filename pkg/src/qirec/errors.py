"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or unknown scenario configuration."""


class NumericalError(RuntimeError):
    """A numerical routine failed; carries the operation name and time point."""

    def __init__(self, operation: str, t: float | None, message: str):
        self.operation = operation
        self.t = t
        where = "" if t is None else f" at t={t:.6g}"
        super().__init__(f"{operation}{where}: {message}")


class SingularMapError(NumericalError):
    """A dynamical map could not be inverted."""


class StepSizeError(NumericalError):
    """Master-equation integration lost accuracy (trace drift or unbounded rates)."""
