"""Exception types raised by the library."""


class DegeneratePhaseError(ValueError):
    """The quadrature vector has zero length, so no phase can be assigned."""


class SearchBoundExceededError(RuntimeError):
    """No ensemble size within the search cap met the error-rate target."""


class NonpositiveProbabilityError(ValueError):
    """A log-space fit received a point with probability <= 0."""


class InsufficientDataError(ValueError):
    """A statistic was requested from a series that is too short."""


class ConfigError(ValueError):
    """A simulation configuration violates a validity constraint."""
