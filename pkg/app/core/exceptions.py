"""
Error hierarchy for the spectral solver
"""


class SpectralError(Exception):
    """Base class for every error raised by the solver library"""


class ParameterDomainError(SpectralError, ValueError):
    """An argument lies outside the domain an operation is defined on"""


class ExponentRangeError(ParameterDomainError):
    """Combined quadrature exponent is not integrable (<= -1)"""


class GammaOverflowError(SpectralError, OverflowError):
    """A gamma ratio is not representable in double precision"""


class ConvergenceFailure(SpectralError, ArithmeticError):
    """An iterative method did not reach its tolerance"""


class SingularSystemError(SpectralError, ArithmeticError):
    """The assembled linear system could not be solved"""


class ParameterMismatchError(SpectralError, ValueError):
    """Two solutions cannot be compared"""


class UnknownRhsError(SpectralError, KeyError):
    """Right-hand side id is not registered"""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown right-hand side"
