"""Exception and warning types shared across the toolkit."""


class HeatqError(Exception):
    """Base class for all errors raised by this package."""


class IntegrationError(HeatqError):
    """The initial-value integrator produced non-finite values."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class BracketingError(HeatqError):
    """No sign change found for an eigenvalue after all bracket expansions."""

    def __init__(self, message, index=None, interval=None):
        super().__init__(message)
        self.index = index
        self.interval = interval


class InterlacingError(HeatqError):
    """Computed spectra violate the strict interlacing property."""

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class SimulationError(HeatqError):
    """The heat-equation time stepper failed or was misconfigured."""


class NearPoleError(HeatqError):
    """A modal series was requested too close to one of its poles."""


class ExtractionError(HeatqError):
    """Pole/zero extraction from a ratio trace is inconsistent."""

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class TraceRangeError(HeatqError):
    """The ratio trace does not cover enough of the spectral axis."""


class RecoveryError(HeatqError):
    """Boundary-kernel recovery produced a non-finite solution."""


class NonConvergenceError(HeatqError):
    """The fixed-point iteration hit the iteration cap before converging."""

    def __init__(self, message, norm_history=()):
        super().__init__(message)
        self.norm_history = list(norm_history)


class DivergenceError(HeatqError):
    """The fixed-point iteration is diverging."""

    def __init__(self, message, norm_history=()):
        super().__init__(message)
        self.norm_history = list(norm_history)


class ConfigError(HeatqError):
    """Invalid experiment configuration or input file."""


class TruncationWarning(UserWarning):
    """Laplace-transform tail truncation estimate exceeds tolerance."""


class ConditioningWarning(UserWarning):
    """A Gram system's condition estimate exceeds the configured ceiling."""
