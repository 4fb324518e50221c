"""Exception hierarchy shared by all phlab modules."""


class PhlabError(Exception):
    """Base class for all laboratory errors."""


class DomainError(PhlabError):
    """Input outside the documented domain (non-finite, wrong dimension, bad range)."""


class DegenerateIntersectionError(PhlabError):
    """Two planes are too close to parallel for a stable intersection."""

    def __init__(self, angle: float):
        super().__init__(f"planes nearly parallel: angle {angle:.3e} rad")
        self.angle = angle


class NonConvergenceError(PhlabError):
    """An iterative scheme hit its cap before reaching the requested gap."""

    def __init__(self, message: str, gap: float | None = None):
        super().__init__(message)
        self.gap = gap


class InversionError(NonConvergenceError):
    """Fixed-point inversion of a perturbed map failed to converge."""


class ContinuationError(PhlabError):
    """Newton continuation of a periodic orbit diverged or degenerated."""


class TransportError(PhlabError):
    """Fiber transport degenerated (line nearly orthogonal to target plane)."""


class GeometryError(PhlabError):
    """A geometric construction (leaf crossing, patch coverage) failed."""


class SizeError(PhlabError):
    """A requested enumeration exceeds the configured size cap."""


class ConfigError(PhlabError):
    """Experiment configuration is malformed or out of documented ranges."""
