"""Exception types shared across the package."""


class DnlsError(Exception):
    """Base class for all package-specific failures."""


class DimensionMismatch(DnlsError, ValueError):
    """State vector length does not match the configured lattice size."""


class UndefinedScaling(DnlsError, ValueError):
    """Physical-frame map requested with epsilon = 0."""


class BasinViolation(DnlsError, ValueError):
    """Solver called outside its validated (epsilon, phi) basin."""


class NewtonDivergence(DnlsError, RuntimeError):
    """Newton iteration failed to converge; carries the last iterate."""

    def __init__(self, message, last_iterate=None, residual_norm=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual_norm = residual_norm


class SingularMatrix(DnlsError, RuntimeError):
    """A matrix required to be invertible is numerically singular."""


class PoleError(DnlsError, ValueError):
    """Closed-form coefficient evaluated at its pole (phi = -1)."""


class EigenSolveFailure(DnlsError, RuntimeError):
    """QR iteration did not converge within the sweep cap."""


class TrackingError(DnlsError, RuntimeError):
    """Eigenvalue continuation across a parameter grid was ambiguous."""


class BlowUp(DnlsError, RuntimeError):
    """Integration produced a non-finite state; carries the last good time."""

    def __init__(self, message, last_good_time=None):
        super().__init__(message)
        self.last_good_time = last_good_time


class InsufficientData(DnlsError, ValueError):
    """Statistic requested from fewer samples than it needs."""


class InvalidWindow(DnlsError, ValueError):
    """Decay-rate window is not monotonically decaying."""


class NoCrossing(DnlsError, ValueError):
    """Crossing-time prediction requested for an undamped system."""


class FitError(DnlsError, RuntimeError):
    """Modulation-parameter fit failed or input is out of basin."""


class DegenerateFrame(DnlsError, RuntimeError):
    """Adjoint-frame normalization pairing vanished."""


class VerificationFailure(DnlsError, RuntimeError):
    """A post-condition check on a computed quantity failed."""


class ProvenanceError(DnlsError, ValueError):
    """Profile and parameters passed together do not belong together."""


class ConfigError(DnlsError, ValueError):
    """Experiment configuration is malformed."""
