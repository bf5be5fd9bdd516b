"""Exception hierarchy.

All errors derive from :class:`QAccessError`; shape and value problems also
derive from :class:`ValueError` so generic callers can catch those.
"""


class QAccessError(Exception):
    """Base class for every error raised by qaccess."""


class ShapeMismatch(QAccessError, ValueError):
    pass


class NonSquare(ShapeMismatch):
    pass


class DimMismatch(ShapeMismatch):
    pass


class EmptySet(QAccessError, ValueError):
    pass


class NotHermitian(QAccessError, ValueError):
    pass


class NotPsd(QAccessError, ValueError):
    pass


class NoConvergence(QAccessError, ArithmeticError):
    pass


class NotOrthonormal(QAccessError, ValueError):
    pass


class TooManyColumns(QAccessError, ValueError):
    pass


class InvalidState(QAccessError, ValueError):
    """A vector or matrix does not describe a valid quantum state."""


class InvalidProbability(QAccessError, ValueError):
    pass


class OutOfRange(QAccessError, ValueError):
    pass


class InvalidGamma(QAccessError, ValueError):
    pass


class InvalidAncillaGram(QAccessError, ValueError):
    pass


class InvalidBlockStructure(QAccessError, ValueError):
    pass


class NotAPurification(QAccessError, ValueError):
    pass


class CandidateNotConsistent(QAccessError, ValueError):
    pass


class BlockNotPsd(QAccessError, ValueError):
    pass


class NumericalBreakdown(QAccessError, ArithmeticError):
    def __init__(self, message: str, iterate=None):
        super().__init__(message)
        self.iterate = iterate


class DegenerateEta(QAccessError, ValueError):
    pass


class CertificateNotFeasible(QAccessError, ValueError):
    pass


class GramMismatch(QAccessError, ValueError):
    pass


class OrthonormalizationFailure(QAccessError, ArithmeticError):
    pass


class GridTooLarge(QAccessError, ValueError):
    pass


class ParseError(QAccessError, ValueError):
    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
