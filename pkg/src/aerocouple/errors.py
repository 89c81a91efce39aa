"""Exception taxonomy for the coupling engine.

All engine errors derive from AerocoupleError so callers (CLI, service,
bindings) can map them to diagnostics uniformly: input problems are
reported as validation failures, runtime problems as non-convergence.
"""


class AerocoupleError(Exception):
    """Base class for all engine errors."""


class ModelFormatError(AerocoupleError):
    """Malformed structural input. Carries line/column when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            message = f"{where}: {message}"
        super().__init__(message)


class ConfigError(AerocoupleError):
    """Invalid or inconsistent coupling configuration."""


class DegenerateCloudError(AerocoupleError):
    """Interpolation source points collinear (2D) or coplanar (3D)."""


class SingularSystemError(AerocoupleError):
    """A linear system required by the solver is singular."""


class ConvergenceError(AerocoupleError):
    """An iterative solve exceeded its iteration budget.

    ``residuals`` holds the residual trajectory for diagnostics.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


class SignalError(AerocoupleError):
    """A postprocessing input does not meet the operation preconditions."""
