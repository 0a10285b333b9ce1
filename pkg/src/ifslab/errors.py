"""Exception types raised by ifslab."""


class IFSLabError(Exception):
    """Base class for all library errors."""


class ConfigError(IFSLabError, ValueError):
    """Invalid user supplied configuration."""


class BudgetExceeded(IFSLabError):
    """Enumeration would exceed the cylinder budget."""


class EqualWords(IFSLabError):
    """Two infinite words that were required to differ are equal."""


class NoConvergence(IFSLabError):
    """An iterative solver failed to reach its tolerance."""


class UnsupportedKind(IFSLabError):
    """Operation not available for this kind of map."""


class ContractionTooWeak(IFSLabError):
    """A map is not contracting strongly enough for the requested construction."""


class SingularMatrix(IFSLabError):
    """A matrix with zero determinant was supplied."""


class NotContracting(IFSLabError):
    """A map fails to be a uniform contraction on its domain."""


class ZeroMass(IFSLabError):
    """A cylinder has zero mass under one measure but not the other."""


class DegenerateGap(IFSLabError):
    """Two parameter points coincide where a positive gap is required."""


class NonpositiveLyapunov(IFSLabError):
    """A Lyapunov exponent estimate is not positive."""


class EmptyBall(IFSLabError):
    """No sample falls inside the smallest requested ball."""


class NotInU(IFSLabError):
    """Parameters lie outside the region where the dimension result applies."""
