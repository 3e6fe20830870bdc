"""Exception types shared across the package."""


class GridCompatibilityError(ValueError):
    """Fine and coarse grids cannot be related by the requested projection."""


class InvalidSampleError(ValueError):
    """A random parameter record violates its family's invariants."""


class SolverFailureError(RuntimeError):
    """An implicit solve did not converge or the system was singular."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class SingularParameterError(ValueError):
    """A scheme parameter hit a pole of the update formula."""


class PositivityError(RuntimeError):
    """Density or pressure became non-positive."""

    def __init__(self, message: str, cell: int | None = None):
        super().__init__(message)
        self.cell = cell


class CflViolationError(ValueError):
    """The requested time step violates the CFL precondition."""

    def __init__(self, message: str, cfl_number: float):
        super().__init__(message)
        self.cfl_number = cfl_number


class GradientFailureError(RuntimeError):
    """A finite-difference gradient hit a non-finite loss value."""


class InvalidGraphError(ValueError):
    """A scheme graph is cyclic or structurally inconsistent."""


class UnmatchedErrorError(ValueError):
    """No tested resolution matches the trained error and extrapolation is off."""
