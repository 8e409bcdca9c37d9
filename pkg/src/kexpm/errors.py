"""Exception hierarchy shared by every kexpm module."""


class KexpmError(Exception):
    """Base class for all errors raised by kexpm."""


class DomainError(KexpmError, ValueError):
    """An argument lies outside the domain of the operation."""


class PoleError(DomainError):
    """The argument is too close to a pole of a Jacobi elliptic function."""


class DegenerateBoxError(DomainError):
    """The spectral box has zero width or zero height."""


class DimensionError(KexpmError, ValueError):
    """Operand shapes do not agree."""


class ModeError(KexpmError, ValueError):
    """Requested evaluation mode is incompatible with the operator structure."""


class QuadratureError(KexpmError, RuntimeError):
    """Adaptive quadrature did not reach its tolerance within budget."""


class ConvergenceError(KexpmError, RuntimeError):
    """An iterative solver exhausted its iteration budget."""


class ContinuationError(ConvergenceError):
    """Newton continuation along a level curve stalled."""

    def __init__(self, theta, message="Newton continuation stalled"):
        super().__init__(f"{message} at theta={theta!r}")
        self.theta = theta


class ExpmOverflowError(KexpmError, OverflowError):
    """The dense matrix exponential is not representable in floating point."""


class MatrixMarketError(KexpmError, ValueError):
    """Malformed Matrix Market input."""

    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
