"""Exception hierarchy shared by every module."""


class TargetedError(Exception):
    """Base class for computation errors raised by this package."""


class ZeroMatrix(TargetedError, ValueError):
    pass


class NoConvergence(TargetedError, RuntimeError):
    """Iteration budget exhausted.

    ``best`` holds the last iterate and ``residual`` its residual so callers
    can still inspect (or use) the partial result.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class InvalidRank(TargetedError, ValueError):
    pass


class RankTooLarge(InvalidRank):
    pass


class DimensionMismatch(TargetedError, ValueError):
    pass


class EmptyDescriptor(TargetedError, ValueError):
    pass


class EmptyObservation(TargetedError, ValueError):
    pass


class EmptyComplement(TargetedError, ValueError):
    pass


class EmptySplit(TargetedError, ValueError):
    pass


class DegeneratePartition(TargetedError, ValueError):
    """All projection values coincide; there is nothing to split."""


class NoSubmatrixFound(TargetedError):
    pass


class OverlapError(TargetedError, ValueError):
    pass


class UnachievablePi(TargetedError, ValueError):
    pass


class ZeroTruth(TargetedError, ValueError):
    pass


class ConvergenceWarning(UserWarning):
    pass
