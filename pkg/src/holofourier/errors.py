"""Exception hierarchy.

Input problems derive from :class:`InputError` (CLI exit code 2); numerical
failures derive from :class:`NumericError` (CLI exit code 1).
"""


class HoloFourierError(Exception):
    """Base class for all package errors."""


class InputError(HoloFourierError, ValueError):
    pass


class NumericError(HoloFourierError, ArithmeticError):
    pass


class SpecMismatchError(InputError):
    """Objects built for different group specs were combined."""


class ExprError(InputError):
    """Raised for malformed expressions.

    ``position`` is the 0-based character offset in the source, when known.
    """

    def __init__(self, message, position=None):
        super().__init__(message if position is None else f"{message} (at position {position})")
        self.position = position


class ExprSyntaxError(ExprError):
    pass


class UnknownVariableError(ExprError):
    pass


class HolomorphyError(ExprError):
    """A division or negative power whose denominator may vanish on the group."""


class NonFiniteError(NumericError):
    pass


class NonConvergentError(NumericError):
    """A normalization integral failed the tail test."""


class AdmissibilityError(NumericError):
    pass


class ExponentialOverflowError(NumericError):
    pass
