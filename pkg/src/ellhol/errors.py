"""Exception types raised by the library."""


class EllholError(Exception):
    """Base class for all library errors."""


class NonConvergent(EllholError, ValueError):
    """A series or product cannot be evaluated to the certified accuracy."""


class InvalidRank(EllholError, ValueError):
    pass


class TruncationTooSmall(EllholError, ValueError):
    pass


class NotInWeylGroup(EllholError, ValueError):
    pass


class DimMismatch(EllholError, ValueError):
    pass


class AlgebraMismatch(EllholError, ValueError):
    pass


class ValidationError(EllholError, ValueError):
    """Input data violates a declared structural constraint (e.g. Lie algebra membership)."""


class DefectiveMonodromy(EllholError, ArithmeticError):
    pass


class NotSpecialOrthogonal(EllholError, ValueError):
    pass


class ZeroMode(EllholError, ArithmeticError):
    """The twisted operator has a kernel, so its zeta-determinant vanishes."""
