"""Exception types shared across the package."""


class KeplerSphereError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(KeplerSphereError):
    """A scenario/config file is malformed or inconsistent."""


class CollisionProximity(KeplerSphereError):
    """State is within the collision guard band around the attracting pole.

    Carries the offending state and the guard that tripped.
    """

    def __init__(self, message, q=None, v=None, t=None, guard=None):
        super().__init__(message)
        self.q = q
        self.v = v
        self.t = t
        self.guard = guard


class StepFailure(KeplerSphereError):
    """The adaptive integrator could not complete a step."""


class DegenerateOrbit(KeplerSphereError):
    """Angular momentum vanishes (rectilinear orbit); derived frames undefined."""


class PositiveEnergy(KeplerSphereError):
    """An operation requiring bound motion (E < 0) was asked for E >= 0."""


class OutsideChart(KeplerSphereError):
    """A point lies outside the domain of the requested chart."""


class ZeroSection(KeplerSphereError):
    """A fiber vector that must be nonzero vanished."""


class EquatorSingularity(KeplerSphereError):
    """Central projection asked for at or beyond the equator q0 <= 0."""


class PunctureHit(KeplerSphereError):
    """Evaluation at the puncture point of a punctured chart."""
