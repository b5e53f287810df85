"""Exception types raised across the package.

Every numeric failure is surfaced as one of these instead of a NaN, so callers
(the simulation harness in particular) can tell a model failure apart from a
numerical one.
"""


class SpdError(ValueError):
    """Base class for domain errors."""


class InvalidInput(SpdError):
    pass


class DimMismatch(SpdError):
    pass


class NotPositiveDefinite(SpdError):
    pass


class NotPositiveSemidefinite(SpdError):
    """A matrix left the PSD cone; ``eigenvalue`` is the offending one."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class SingularMatrix(SpdError):
    pass


class Overflow(SpdError, ArithmeticError):
    pass


class NotDiagonalizable(SpdError):
    pass


class DegenerateInput(SpdError):
    pass


class EmptySample(SpdError):
    pass


class NonConvergence(SpdError, RuntimeError):
    def __init__(self, iterations, last_change):
        super().__init__(
            f"no convergence after {iterations} iterations "
            f"(last change {last_change:.3e})"
        )
        self.iterations = iterations
        self.last_change = last_change


class InvalidComponent(SpdError, IndexError):
    pass


class UndefinedAnisotropy(SpdError):
    pass


class DegenerateGradientScheme(SpdError):
    pass


class InvalidSignal(SpdError):
    pass


class ParseError(SpdError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class StudyAborted(SpdError, RuntimeError):
    pass
