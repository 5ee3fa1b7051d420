"""Exception types raised across the package."""


class VolterraIMCError(Exception):
    """Base class for all package errors."""


class DimensionError(VolterraIMCError, ValueError):
    pass


class NotAnEquilibriumError(VolterraIMCError, ValueError):
    """The operating point leaves a constant residual above tolerance."""

    def __init__(self, residuals, tolerance):
        self.residuals = tuple(float(r) for r in residuals)
        self.tolerance = tolerance
        super().__init__(
            f"operating point is not an equilibrium: residual constants "
            f"{self.residuals} exceed tolerance {tolerance:g}"
        )


class ConvergenceError(VolterraIMCError, RuntimeError):
    def __init__(self, message, residual):
        self.residual = float(residual)
        super().__init__(f"{message} (final residual {self.residual:.3e})")


class DeviationFormError(VolterraIMCError, ValueError):
    """A system passed to the Carleman lift still carries a constant drift term."""


class PoleHitError(VolterraIMCError, ZeroDivisionError):
    def __init__(self, partial_sum, condition):
        self.partial_sum = complex(partial_sum)
        self.condition = float(condition)
        super().__init__(
            f"resolvent is singular at partial frequency sum {self.partial_sum} "
            f"(condition estimate {self.condition:.3e})"
        )


class DivergenceError(VolterraIMCError, FloatingPointError):
    def __init__(self, time, label="simulation"):
        self.time = float(time)
        self.label = label
        super().__init__(f"{label} diverged at t = {self.time:.6g}")


class NotSeparableError(VolterraIMCError, ValueError):
    pass


class AmbiguityError(VolterraIMCError, ValueError):
    def __init__(self, candidates):
        self.candidates = list(candidates)
        super().__init__(f"ambiguous root assignment, candidates: {self.candidates}")


class NumericFailure(VolterraIMCError, ArithmeticError):
    pass


class UnstablePlantError(VolterraIMCError, ValueError):
    pass


class ProperenessError(VolterraIMCError, ValueError):
    pass


class ConfigError(VolterraIMCError, ValueError):
    """Parse error in a system/scenario config, with 1-based position."""

    def __init__(self, message, line=0, column=0, path=None):
        self.line = line
        self.column = column
        self.path = path
        where = f"{path or '<config>'}:{line}:{column}"
        super().__init__(f"{where}: {message}")
