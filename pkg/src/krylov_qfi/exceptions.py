"""Exception hierarchy.

Every numerical failure raised by the package derives from
:class:`KrylovQFIError`, so callers (and the CLI) can map the whole family to
one exit status while still reporting the specific class name.
"""


class KrylovQFIError(Exception):
    """Base class for all numerical/validation failures in krylov_qfi."""


class ConfigError(KrylovQFIError, ValueError):
    """Invalid experiment configuration or CLI arguments."""


# -- density matrices and operators ------------------------------------------

class NotHermitianError(KrylovQFIError, ValueError):
    pass


class NotUnitTraceError(KrylovQFIError, ValueError):
    pass


class RankDeficientError(KrylovQFIError, ValueError):
    """Smallest eigenvalue below the rank threshold; the QFI formula needs full rank."""


class NotPositiveError(KrylovQFIError, ValueError):
    pass


class DimensionMismatchError(KrylovQFIError, ValueError):
    pass


class DimensionTooLargeError(KrylovQFIError, ValueError):
    pass


class ZeroSeedError(KrylovQFIError, ValueError):
    """The seed operator vanishes, i.e. [rho, H] = 0 and the QFI is exactly zero."""


class NotTracePreservingError(KrylovQFIError, ValueError):
    pass


class NonTracelessDerivativeError(KrylovQFIError, ValueError):
    pass


# -- Lanczos / tridiagonal ---------------------------------------------------

class NonConvergedOrthogonalityError(KrylovQFIError, ArithmeticError):
    pass


class SingularTridiagonalError(KrylovQFIError, ArithmeticError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class IncompleteKrylovError(KrylovQFIError, ValueError):
    """Lanczos stopped before breakdown, so T^{-1} e0 is not the exact SLD expansion."""


# -- QFI bookkeeping ---------------------------------------------------------

class ZeroVectorError(KrylovQFIError, ValueError):
    pass


class IdentityViolationError(KrylovQFIError, ArithmeticError):
    pass


# -- spectral measures -------------------------------------------------------

class NormalizationFailureError(KrylovQFIError, ArithmeticError):
    pass


class HankelIllConditionedError(KrylovQFIError, ArithmeticError):
    def __init__(self, message, cond_estimate=None):
        super().__init__(message)
        self.cond_estimate = cond_estimate


class NodeAtZeroError(KrylovQFIError, ArithmeticError):
    pass


class InsufficientAtomsError(KrylovQFIError, ValueError):
    pass


class BadAlphaError(KrylovQFIError, ValueError):
    pass


class BadIntervalError(KrylovQFIError, ValueError):
    pass


class BreakdownError(KrylovQFIError, ArithmeticError):
    """The measure supports fewer orthogonal polynomials than were requested."""


class NonPositiveSeriesError(KrylovQFIError, ValueError):
    pass


class WindowTooShortError(KrylovQFIError, ValueError):
    pass


# -- export -------------------------------------------------------------------

class ExportError(OSError):
    """Writing or reading an output file failed; ``path`` names the file."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path
