"""The errors module contains the exception hierarchy of vfplab.

Every exception carries the exit code used by the command-line interface.
"""


class VFPError(Exception):
    """Base class of all vfplab errors."""

    exit_code = 1


class ConfigError(VFPError):
    """Invalid configuration: schema, CFL, unknown potential, non-PSD J."""

    exit_code = 2


class DomainError(VFPError, ValueError):
    """Argument outside the mathematical domain of an operation."""

    exit_code = 2


class StateError(VFPError):
    """Operation called on an object in an unusable state."""

    exit_code = 3


class NumericalError(VFPError):
    """Base class of numerical failures."""

    exit_code = 3


class BlowUpError(NumericalError):
    """Non-finite particle state after a step."""

    def __init__(self, index, time):
        self.index = index
        self.time = time
        super().__init__(
            f"non-finite state for particle {index} at t = {time:.6g}"
        )


class NonConvergenceError(NumericalError):
    """Iteration stopped at max_iter."""

    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"no convergence after {iterations} iterations "
            f"(last residual {residual:.3e})"
        )


class CoverageError(NumericalError):
    """Requested time outside the recorded force-field history."""


class TruncationError(NumericalError):
    """Density estimate loses mass outside the grid or cannot be resolved."""


class AcceptanceError(VFPError):
    """An acceptance check failed in --check mode."""

    exit_code = 4
