"""Exception and warning types shared across the toolkit."""


class OscillabError(Exception):
    """Base class for all toolkit errors."""


class SpecError(OscillabError):
    """A model or config constraint is violated (bad parameters, unknown keys)."""


class InvalidStart(OscillabError):
    """Initial state outside the basin where the run requires an interior start."""


class NumericalBlowup(OscillabError):
    """State left the guard ball or became non-finite.

    Carries the partial trajectory record (may be None) and the blowup time.
    """

    def __init__(self, message, record=None, t=None):
        super().__init__(message)
        self.record = record
        self.t = t


class NoCycle(OscillabError):
    """No Poincare-section return found within the allowed horizon."""


class SectionError(OscillabError):
    """Return map failed to converge, or the found orbit is not stable/transverse."""


class NotConverged(OscillabError):
    """Numeric asymptotic phase did not converge to the cycle; carries residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class StencilOutOfBasin(OscillabError):
    """A finite-difference stencil point falls outside the basin."""


class BranchAmbiguity(OscillabError):
    """Consecutive raw phases differ by >= T/2; dt too coarse near the singularity."""


class PhaseUndefined(OscillabError):
    """Phase queried past the trajectory's validity window (exit or truncation)."""


class NoSurvivors(OscillabError):
    """Every path exited before the requested time; carries the survivor curve."""

    def __init__(self, message="every path exited before the evaluation time",
                 survivor_curve=None):
        super().__init__(message)
        self.survivor_curve = survivor_curve


class GridTooCoarse(OscillabError):
    """Histogram grid cannot represent the cycle (too few distinct bins touched)."""


class Unsupported(OscillabError):
    """Requested quantity does not exist for this model (no analytic map, etc.)."""


class OracleFailed(OscillabError):
    """The stationary-density solve did not converge; carries the residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(OscillabError):
    """Experiment configuration is malformed; message names the offending key."""


class CoarseStepWarning(UserWarning):
    """dt exceeds sigma^2, so multiplicative-noise bias may be underresolved."""


class SingularityDominated(UserWarning):
    """Quadrature excluded a non-negligible mass around a phase singularity."""
