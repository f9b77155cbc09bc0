"""Exception types shared across the package."""


class MlrankError(Exception):
    """Base class for all library errors."""


class FieldMismatch(MlrankError, ValueError):
    """Operands live in different fields, or fields are not related."""


class SingularMatrix(MlrankError, ArithmeticError):
    """A matrix that must be invertible is not."""


class NotAUnit(MlrankError, ArithmeticError):
    """A local-ring element vanishes at the base point and cannot be inverted."""


class BudgetExceeded(MlrankError):
    """An exhaustive enumeration would exceed the allowed budget."""


class NoProgress(MlrankError):
    """An iteration failed to reduce the commutative rank."""


class BoundViolation(MlrankError, AssertionError):
    """A certified inequality failed to hold."""
