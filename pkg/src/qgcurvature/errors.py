"""Exception types raised by the library."""


class GridMismatchError(ValueError):
    """Two fields or profiles live on incompatible grids or truncations."""


class DegeneratePlaneError(ValueError):
    """The two tangent vectors do not span a plane (zero Gram determinant)."""


class ConvergenceError(RuntimeError):
    """An iterative method hit its iteration cap without converging."""


class SimulationBlowupError(RuntimeError):
    """The time integrator detected runaway norm growth.

    The partial trajectory up to the failure is attached as ``trajectory``.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ConfigError(ValueError):
    """Invalid CLI/JSON job configuration."""
