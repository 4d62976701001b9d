"""Exception hierarchy shared across the package.

Two broad classes matter for the command-line front end: configuration
problems (exit code 2) and numerical failures (exit code 3). Everything
raised by the numerics derives from NumericalError so the runner can map
errors to exit codes without inspecting messages.
"""


class WeakTrajError(Exception):
    """Base class for all package errors."""


class ConfigError(WeakTrajError):
    """Invalid scenario configuration. Carries the offending field path."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class NumericalError(WeakTrajError):
    """Base class for failures of the numerics themselves."""


class InvalidStateError(NumericalError):
    """A Gaussian state lost normalizability (Re alpha <= 0 somewhere)."""


class RangeError(NumericalError):
    """A time outside the sampled grid was requested."""


class CalibrationError(NumericalError):
    """Root bracketing for the potential calibration failed."""


class RefinementError(NumericalError):
    """Integrator step too coarse (symplecticity check failed)."""


class SingularityError(NumericalError):
    """An Ermakov solution crossed rho = 0."""


class MeshError(NumericalError):
    """Grid too small for the state it carries (spectral aliasing)."""


class NodeProximityError(NumericalError):
    """Velocity field requested too close to a wavefunction node."""

    def __init__(self, message, density):
        self.density = density
        super().__init__(message)


class NoWeakValueError(NumericalError):
    """Postselection overlap below the configured floor."""

    def __init__(self, message, overlap_magnitude):
        self.overlap_magnitude = overlap_magnitude
        super().__init__(message)


class BranchSeparationError(NumericalError):
    """More than one branch has support near the meter; the closed-form
    weak value does not apply there. Use the grid oracle instead."""


class SequencingError(NumericalError):
    """Meter interaction windows overlap; the first-order product formula
    assumes disjoint windows."""
