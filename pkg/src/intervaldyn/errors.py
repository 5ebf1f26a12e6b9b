"""Exception hierarchy.

Everything raised on purpose derives from :class:`MapError`, so the CLI can
map domain failures to exit code 2 with a single ``except`` clause.
"""


class MapError(Exception):
    """Base class for domain errors."""


class BadParam(MapError, ValueError):
    pass


class OutOfDomain(MapError, ValueError):
    pass


class ExceptionalPoint(MapError, ValueError):
    """Raised when a map is evaluated exactly on a point of its exceptional set."""

    def __init__(self, x):
        super().__init__(f"x={x!r} is an exceptional point; use lateral evaluation")
        self.x = x


class RangeViolation(MapError, ValueError):
    def __init__(self, x, value):
        super().__init__(f"f({x!r})={value!r} leaves [0,1] beyond round-off")
        self.x = x
        self.value = value


class CriticalPoint(MapError, ArithmeticError):
    pass


class DegenerateSide(MapError):
    """One-sided derivative has no sign (the branch is constant)."""


class PartialOrbit(MapError):
    pass


class NotAGapMap(MapError):
    def __init__(self, msg, interval=None, image_measure=None):
        super().__init__(msg)
        self.interval = interval
        self.image_measure = image_measure


class SubdivisionOverflow(MapError):
    pass


class HypothesisFailed(MapError):
    pass


class UnboundedDerivative(MapError):
    pass


class DegenerateScale(MapError):
    pass


class PreconditionFailed(MapError):
    pass


class SearchExhausted(MapError):
    pass


class SpecFormatError(Exception):
    """Malformed map specification document (I/O class, exit code 3)."""
