"""Exception types shared across the workbench."""


class WorkbenchError(Exception):
    """Base class for all workbench errors."""


class InvalidInputError(WorkbenchError, ValueError):
    """An argument violates a documented precondition."""


class IncompatibleSystemsError(WorkbenchError, ValueError):
    """Arithmetic attempted between systems with different sample times."""


class ImproperSystemError(WorkbenchError, ValueError):
    """Time-domain response requested for a non-proper transfer function."""


class PoleEvaluationError(WorkbenchError, ArithmeticError):
    """Evaluation requested at (or numerically at) a pole."""

    def __init__(self, z, magnitude):
        self.z = z
        self.magnitude = magnitude
        super().__init__(f"denominator magnitude {magnitude:.3e} at z = {z} is below the pole guard")


class UnsupportedModelError(WorkbenchError, ValueError):
    """Model outside the supported regime (e.g. overdamped environment)."""


class NoCrossingError(WorkbenchError, RuntimeError):
    """A bracketing search found no sign change in the given interval."""

    def __init__(self, bracket, values):
        self.bracket = bracket
        self.values = values
        super().__init__(f"no crossing in bracket {bracket}; endpoint values {values}")


class SingularSampleError(WorkbenchError, ArithmeticError):
    """Quadrature encountered a non-finite sample."""

    def __init__(self, omega, value):
        self.omega = omega
        self.value = value
        super().__init__(f"non-finite sample {value} at omega = {omega}")


class ConfigError(WorkbenchError, ValueError):
    """Configuration file cannot be parsed or validated."""
