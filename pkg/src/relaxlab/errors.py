"""Exception hierarchy shared by all relaxlab modules."""


class RelaxLabError(Exception):
    """Base class for every error raised by relaxlab."""


class ShapeMismatch(RelaxLabError, ValueError):
    pass


class SingularMatrix(RelaxLabError, ArithmeticError):
    pass


class NotSymmetric(RelaxLabError, ValueError):
    pass


class Overflow(RelaxLabError, OverflowError):
    pass


class StructureViolation(RelaxLabError, ValueError):
    """A tableau breaks the triangular / non-negative diagonal structure."""


class TooFewStages(RelaxLabError, ValueError):
    pass


class NullityMismatch(RelaxLabError, ValueError):
    pass


class UnknownScheme(RelaxLabError, KeyError):
    pass


class SingularP(RelaxLabError, ArithmeticError):
    pass


class BadMomentOrder(RelaxLabError, ValueError):
    pass


class SingularStageMatrix(RelaxLabError, ArithmeticError):
    pass


class NonCommensurateInterval(RelaxLabError, ValueError):
    pass


class UnknownModel(RelaxLabError, KeyError):
    pass


class EmptyTable(RelaxLabError, ValueError):
    pass


class DegenerateFit(RelaxLabError, ValueError):
    pass


class IoFailure(RelaxLabError, OSError):
    pass


class CellFailure(RelaxLabError, RuntimeError):
    """A convergence-study cell failed; carries the offending coordinates."""

    def __init__(self, scheme, epsilon, dt, cause):
        super().__init__(f"cell (scheme={scheme}, epsilon={epsilon!r}, dt={dt!r}) failed: {cause}")
        self.scheme = scheme
        self.epsilon = epsilon
        self.dt = dt
        self.cause = cause
