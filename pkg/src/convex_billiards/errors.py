"""Exception hierarchy.

Input problems derive from :class:`ValidationError` (a ``ValueError``);
numerical failures derive from :class:`ConvergenceError`.  The command-line
front end maps the first family to exit code 1 and the second to exit code 2.
"""


class BilliardError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(BilliardError, ValueError):
    pass


class ConvergenceError(BilliardError, RuntimeError):
    pass


# geometry
class TooFewVertices(ValidationError):
    pass


class NonConvex(ValidationError):
    pass


class Degenerate(ValidationError):
    pass


# Euclidean orbits
class NotAcute(ValidationError):
    pass


class NotThreeBounce(ValidationError):
    pass


class NotStrictlyShorter(ValidationError):
    pass


# approximation scheme
class OriginNotInterior(ValidationError):
    pass


class CertificationFailed(ConvergenceError):
    pass


class NotCentrallySymmetric(ValidationError):
    pass


# Minkowski billiards
class GaugeError(ValidationError):
    pass


class PointOnLine(ValidationError):
    pass


class DegenerateSegment(ValidationError):
    pass


class NonConvergence(ConvergenceError):
    pass
