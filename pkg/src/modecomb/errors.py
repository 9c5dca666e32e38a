"""Exception types shared across the package."""


class ModecombError(Exception):
    """Base class for all package errors."""


class ConfigError(ModecombError):
    """Scenario configuration is missing, malformed, or inconsistent."""


class NumericalError(ModecombError):
    """A numerical routine failed in a way the caller cannot recover from."""


class DegenerateModeError(ModecombError):
    """A mechanical mode sits too close to the electrical resonance."""


class DimensionMismatchError(ModecombError):
    """Array or mode-count dimensions disagree."""


class SingularMatrixError(NumericalError):
    """The mode-coupling matrix is singular at the requested frequencies."""


class UnstablePumpError(ModecombError):
    """A parametric coupling exceeds the pair instability threshold."""


class NonPhysicalInputError(ModecombError):
    """An input matrix fails the physicality predicate."""


class NotPSDError(ModecombError):
    """A covariance matrix has an eigenvalue below tolerance."""


class GainBelowUnityError(ModecombError):
    """Amplifier power gain below one is not invertible in this model."""


class EmptySamplesError(ModecombError):
    """A statistics routine received no samples."""


class MissingFitCovarianceError(ModecombError):
    """Error propagation requires fit uncertainties that are absent."""


class ZeroVarianceError(ModecombError):
    """A weighted combination would divide by zero uncertainty."""


class FitDivergedError(NumericalError):
    """A least-squares fit failed to converge."""


class InsufficientDataError(ModecombError):
    """Too few data points for the requested fit."""


class NegativeNoiseError(ModecombError):
    """Solving for added noise produced a negative photon number."""


class OptimizerFailureError(NumericalError):
    """The witness optimizer could not produce a valid vector pair."""


class NonConvergenceWarning(UserWarning):
    """A projection or feasibility loop stopped at its iteration cap."""


class PhysicalityWarning(UserWarning):
    """A quantity was clamped to keep it physically meaningful."""
