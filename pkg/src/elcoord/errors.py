"""Exception types shared across the package."""


class ElcoordError(Exception):
    """Base class for all package-specific errors."""


class OutOfDomain(ElcoordError):
    """A link distance exceeded the communication radius, so the potential
    and its derivatives are undefined. Callers decide whether this means a
    broken link or bad input."""


class SingularConfiguration(ElcoordError):
    """Jacobian too close to singular for task-space quantities."""


class RegionContainsSingularity(ElcoordError):
    """A sampling region for bound estimation includes (or comes too close
    to) a kinematically singular elbow angle."""


class DisconnectedInitialGraph(ElcoordError):
    """The initial communication graph is not connected."""


class InvalidGeometry(ElcoordError):
    """Initial geometry violates a precondition (e.g. agents already out of
    communication range)."""


class NotFound(ElcoordError):
    """Gain synthesis exhausted its search budget without a certified
    candidate. Does not prove that none exists."""


class ParseError(ElcoordError):
    """Scenario file is malformed. Message carries section/field context."""
