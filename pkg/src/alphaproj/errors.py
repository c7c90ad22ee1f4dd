"""Exception types raised by the solvers and family helpers."""


class AlphaProjError(Exception):
    """Base class for all errors raised by this package."""


class SingularPair(AlphaProjError):
    """Two measures have disjoint supports where a mixture needs overlap."""


class DimensionMismatch(AlphaProjError, ValueError):
    pass


class InadmissibleTheta(AlphaProjError, ValueError):
    """The positivity condition of a power-law member fails at some symbol."""


class DegenerateDenominator(AlphaProjError, ZeroDivisionError):
    pass


class InfiniteTerm(AlphaProjError):
    """A quantity needs finite divergences but one of them is +inf."""


class Infeasible(AlphaProjError):
    """The linear family is empty."""


class NotInFamily(AlphaProjError, ValueError):
    pass


class NotConverged(AlphaProjError):
    pass


class TooLarge(AlphaProjError, ValueError):
    """Brute-force enumeration refused: the alphabet exceeds the cost guard."""
