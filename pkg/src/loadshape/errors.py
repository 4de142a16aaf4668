"""Exception hierarchy shared by every loadshape module."""


class LoadShapeError(ValueError):
    """Base class for all validation and contract errors raised by loadshape."""


# curves
class WrongLengthError(LoadShapeError):
    pass


class NegativeValueError(LoadShapeError):
    pass


class NonFiniteError(LoadShapeError):
    pass


class AllZeroError(LoadShapeError):
    pass


class NotADivisorError(LoadShapeError):
    pass


# dtw
class LengthMismatchError(LoadShapeError):
    pass


class TooShortError(LoadShapeError):
    pass


class TooLongError(LoadShapeError):
    pass


# cluster
class KTooLargeError(LoadShapeError):
    pass


class EmptyInputError(LoadShapeError):
    pass


class SingleCurveError(LoadShapeError):
    pass


# predict
class InsufficientHistoryError(LoadShapeError):
    pass


class NoHistoryError(LoadShapeError):
    pass


class ZeroActualError(LoadShapeError):
    pass


# pld
class ShapeMismatchError(LoadShapeError):
    pass


class AssumptionViolatedError(LoadShapeError):
    pass


class NoConvergenceError(LoadShapeError):
    pass


class ZeroDenominatorError(LoadShapeError):
    pass
