"""Exception hierarchy shared by all modules."""


class MultipointError(Exception):
    """Base class for every error raised by this package."""


class NotHermitian(MultipointError, ValueError):
    pass


class DimensionMismatch(MultipointError, ValueError):
    pass


class DegenerateLevel(MultipointError):
    """The requested eigenvalue is not simple."""


class SingularShift(MultipointError):
    """A spectral shift collides with an eigenvalue outside the target level."""


class SeriesDiverges(MultipointError):
    pass


class BothZero(MultipointError, ValueError):
    pass


class SpectrumHit(MultipointError):
    """The evaluation point lies on (or numerically at) the spectrum."""


class GapViolation(MultipointError):
    pass


class UnsupportedOrder(MultipointError, ValueError):
    pass


class SumAlphaZero(MultipointError, ValueError):
    pass


class NearSingularCorrection(MultipointError):
    pass


class IndexOutOfRange(MultipointError, IndexError):
    pass


class NotUnitary(MultipointError, ValueError):
    pass


class DoesNotCommute(MultipointError, ValueError):
    pass


class IllConditionedGram(MultipointError):
    pass


class NoConvergence(MultipointError):
    pass


class TooFewPoints(MultipointError, ValueError):
    pass


class NoisyData(MultipointError):
    pass
