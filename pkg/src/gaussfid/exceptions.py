"""Exception and warning types raised across the package."""


class GaussFidError(Exception):
    """Base class for all errors raised by gaussfid."""


class NonPositiveCovariance(GaussFidError, ValueError):
    """A covariance matrix that must be positive-definite is not."""


class SubHeisenbergEllipse(GaussFidError, ValueError):
    """Noise ellipse violates sigma1^2 * sigma2^2 >= 1/4."""


class UnphysicalParameters(GaussFidError, ValueError):
    """Scalar channel parameters violate a physicality constraint."""


class UnphysicalChannel(GaussFidError, ValueError):
    """A channel fails the physicality check.

    The offending :class:`~gaussfid.core.PhysicalityReport` is kept on
    ``self.report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NonzeroNoiseMean(GaussFidError, ValueError):
    """Fidelity evaluation was attempted on a channel with <F> != 0."""


class NumericalInconsistency(GaussFidError, ArithmeticError):
    """An analytic fidelity fell outside [0, 1] beyond rounding tolerance."""


class TruncationTooSmall(GaussFidError, ValueError):
    """Fock-space truncation is too small for the requested operator."""


class StepTooLarge(GaussFidError, ValueError):
    """Finite-difference results at h and h/2 disagree."""


class QuadratureNotConverged(GaussFidError, ArithmeticError):
    """Doubling the number of quadrature nodes changed the result."""


class DegenerateProbeSet(GaussFidError, ValueError):
    """Probe inputs do not span phase space."""


class NegativeVarianceEstimate(GaussFidError, ValueError):
    """An estimated noise variance is negative beyond tolerance."""


class UnphysicalReconstruction(UnphysicalChannel):
    """Tomographic reconstruction produced an unphysical channel."""


class BenchmarkUnreachable(GaussFidError, ValueError):
    """The fidelity curve never drops to the requested benchmark."""


class DegenerateRotation(UserWarning):
    """Phase optimisation is flat: both linear coefficients vanish."""


class PhysicalityWarning(UserWarning):
    """Channel passes the matrix physicality test but not a reduced one."""
