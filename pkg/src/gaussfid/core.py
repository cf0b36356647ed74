"""Single-mode Gaussian processes: data model and phase-space algebra.

Conventions
-----------
Quadratures are ``X = (a + a^dag)/sqrt(2)`` and ``P = -i(a - a^dag)/sqrt(2)``
(hbar = 1), so the vacuum has ``Var(X) = Var(P) = 1/2``.  All covariance
matrices are stored as plain variances and symmetrised covariances.  The
"gamma" convention, twice the variance matrix so that a coherent state has
``gamma = identity``, is only available through
:meth:`CovarianceMatrix.to_gamma` and :meth:`CovarianceMatrix.from_gamma`.

A channel maps input quadratures to output quadratures as::

    y_out = A y_in + F,    V_out = A V_in A^T + V_F

with a real 2x2 gain matrix ``A`` and Gaussian noise ``F`` of mean ``<F>``
and covariance ``V_F``.
"""

from dataclasses import dataclass, field, replace
import json
import math

import numpy as np

from ._validation import EIG_TOL, check_finite
from .exceptions import NonPositiveCovariance, UnphysicalChannel

__all__ = [
    "Quadratures",
    "CovarianceMatrix",
    "GainMatrix",
    "ComplexGains",
    "NoiseEllipse",
    "GaussianChannel",
    "PhysicalityReport",
    "propagate_covariance",
    "ellipse_from_covariance",
    "covariance_from_ellipse",
    "complex_gains",
    "check_physical",
    "subtract_noise_mean",
    "rotation_matrix",
    "random_physical_channel",
]


def rotation_matrix(phi):
    """Phase-space rotation taking ``a -> a exp(i phi)``."""
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Quadratures:
    """Mean values ``(<X>, <P>)``."""

    x: float = 0.0
    p: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", check_finite(self.x, "x"))
        object.__setattr__(self, "p", check_finite(self.p, "p"))

    @classmethod
    def from_array(cls, arr):
        x, p = np.asarray(arr, dtype=float).reshape(2)
        return cls(x, p)

    @classmethod
    def from_amplitude(cls, alpha):
        """Quadrature means of the coherent state ``|alpha>``."""
        alpha = complex(alpha)
        return cls(math.sqrt(2) * alpha.real, math.sqrt(2) * alpha.imag)

    def as_array(self):
        return np.array([self.x, self.p])

    def is_zero(self):
        return self.x == 0.0 and self.p == 0.0


@dataclass(frozen=True)
class CovarianceMatrix:
    """Second moments ``Var(X)``, ``Var(P)`` and ``Cov(X, P)``.

    Positivity is not enforced here because a noise covariance may
    legitimately vanish (the identity channel); operations that need a
    positive-definite matrix check for it themselves.
    """

    sxx: float
    spp: float
    cxp: float = 0.0

    def __post_init__(self):
        for name in ("sxx", "spp", "cxp"):
            object.__setattr__(self, name, check_finite(getattr(self, name), name))

    @classmethod
    def vacuum(cls):
        return cls(0.5, 0.5, 0.0)

    @classmethod
    def zero(cls):
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_matrix(cls, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.shape != (2, 2):
            raise ValueError(f"covariance matrix must be 2x2, got shape {m.shape}")
        return cls(m[0, 0], m[1, 1], 0.5 * (m[0, 1] + m[1, 0]))

    @classmethod
    def from_gamma(cls, gamma):
        """Build from the factor-2 convention (coherent state -> identity)."""
        return cls.from_matrix(0.5 * np.asarray(gamma, dtype=float))

    def as_matrix(self):
        return np.array([[self.sxx, self.cxp], [self.cxp, self.spp]])

    def to_gamma(self):
        return 2.0 * self.as_matrix()

    @property
    def det(self):
        return self.sxx * self.spp - self.cxp**2

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.as_matrix())[0])

    def is_positive_definite(self):
        return self.sxx > 0 and self.det > 0

    def rotated(self, phi):
        r = rotation_matrix(phi)
        return CovarianceMatrix.from_matrix(r @ self.as_matrix() @ r.T)


@dataclass(frozen=True)
class GainMatrix:
    """Real 2x2 map of the quadrature means, ``<y_out> = A <y_in>``."""

    a11: float
    a12: float
    a21: float
    a22: float

    def __post_init__(self):
        for name in ("a11", "a12", "a21", "a22"):
            object.__setattr__(self, name, check_finite(getattr(self, name), name))

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def diagonal(cls, gx, gp):
        return cls(gx, 0.0, 0.0, gp)

    @classmethod
    def from_matrix(cls, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.shape != (2, 2):
            raise ValueError(f"gain matrix must be 2x2, got shape {m.shape}")
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def as_matrix(self):
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    @property
    def det(self):
        return self.a11 * self.a22 - self.a12 * self.a21

    def is_diagonal(self):
        return self.a12 == 0.0 and self.a21 == 0.0


@dataclass(frozen=True)
class ComplexGains:
    """Gains ``(C, D)`` of the complex-amplitude map ``alpha -> C alpha + D alpha*``."""

    c: complex
    d: complex

    def __post_init__(self):
        object.__setattr__(self, "c", complex(self.c))
        object.__setattr__(self, "d", complex(self.d))

    def apply(self, alpha):
        alpha = np.asarray(alpha, dtype=complex)
        return self.c * alpha + self.d * np.conj(alpha)

    @property
    def det(self):
        """``|C|^2 - |D|^2``, equal to the determinant of the real gain matrix."""
        return abs(self.c) ** 2 - abs(self.d) ** 2


@dataclass(frozen=True)
class NoiseEllipse:
    """Principal-axis form of an output covariance.

    ``s1sq >= s2sq`` are the variances along the major and minor axes, and
    ``theta`` in (-pi/2, pi/2] is the angle of the major axis from the
    x-axis.
    """

    s1sq: float
    s2sq: float
    theta: float = 0.0

    def __post_init__(self):
        s1 = check_finite(self.s1sq, "s1sq")
        s2 = check_finite(self.s2sq, "s2sq")
        theta = check_finite(self.theta, "theta")
        if s2 <= 0:
            raise NonPositiveCovariance(f"ellipse variances must be > 0, got s2sq={s2}")
        if s1 < s2:
            raise ValueError(f"s1sq must be >= s2sq, got {s1} < {s2}")
        object.__setattr__(self, "s1sq", s1)
        object.__setattr__(self, "s2sq", s2)
        object.__setattr__(self, "theta", _wrap_half_pi(theta))

    @property
    def mean_var(self):
        return 0.5 * (self.s1sq + self.s2sq)

    @property
    def delta_var(self):
        return 0.5 * (self.s1sq - self.s2sq)

    @property
    def is_circle(self):
        return self.s1sq == self.s2sq

    def variance_product(self):
        return self.s1sq * self.s2sq


def _wrap_half_pi(theta):
    # ellipse orientation is pi-periodic; map onto (-pi/2, pi/2]
    wrapped = math.remainder(theta, math.pi)
    if wrapped <= -math.pi / 2:
        wrapped += math.pi
    return wrapped


@dataclass(frozen=True)
class PhysicalityReport:
    """Outcome of :func:`check_physical`.

    Attributes
    ----------
    noise_min_eigenvalue : float
        Smallest eigenvalue of the noise covariance.
    uncertainty_margin : float
        ``det(V_F) - (1 - det A)^2 / 4``; nonnegative for a physical map.
    quadrature_margins : tuple of float or None
        ``(2 Var(X_out) - A11^2, 2 Var(P_out) - A22^2)`` for diagonal gain,
        else None.
    """

    noise_min_eigenvalue: float
    uncertainty_margin: float
    quadrature_margins: tuple = None
    tol: float = EIG_TOL

    @property
    def noise_psd(self):
        return self.noise_min_eigenvalue >= -self.tol

    @property
    def uncertainty_ok(self):
        return self.uncertainty_margin >= -self.tol

    @property
    def quadrature_ok(self):
        if self.quadrature_margins is None:
            return None
        return all(m >= -self.tol for m in self.quadrature_margins)

    @property
    def physical(self):
        return self.noise_psd and self.uncertainty_ok

    def __bool__(self):
        return self.physical

    def as_dict(self):
        return {
            "physical": self.physical,
            "noise_psd": self.noise_psd,
            "noise_min_eigenvalue": self.noise_min_eigenvalue,
            "uncertainty_ok": self.uncertainty_ok,
            "uncertainty_margin": self.uncertainty_margin,
            "quadrature_ok": self.quadrature_ok,
            "quadrature_margins": (
                None if self.quadrature_margins is None else list(self.quadrature_margins)
            ),
        }


@dataclass(frozen=True)
class GaussianChannel:
    """A single-mode Gaussian process ``(A, <F>, V_F)``.

    ``offset`` records a displacement that has been removed from the noise
    mean by :func:`subtract_noise_mean`; it does not enter any fidelity.
    """

    gain: GainMatrix
    noise_mean: Quadratures = field(default_factory=Quadratures)
    noise_cov: CovarianceMatrix = field(default_factory=CovarianceMatrix.zero)
    offset: Quadratures = field(default_factory=Quadratures)

    @classmethod
    def identity(cls):
        return cls(GainMatrix.identity())

    @classmethod
    def validated(cls, gain, noise_mean=None, noise_cov=None):
        """Construct a channel and raise UnphysicalChannel if it is not physical."""
        ch = cls(
            gain,
            noise_mean if noise_mean is not None else Quadratures(),
            noise_cov if noise_cov is not None else CovarianceMatrix.zero(),
        )
        report = check_physical(ch)
        if not report.physical:
            raise UnphysicalChannel("channel violates the physicality constraints", report)
        return ch

    @classmethod
    def from_output(cls, gain, output_cov, noise_mean=None):
        """Channel whose coherent-state output has covariance ``output_cov``."""
        if isinstance(output_cov, NoiseEllipse):
            output_cov = covariance_from_ellipse(output_cov)
        a = gain.as_matrix()
        noise = CovarianceMatrix.from_matrix(output_cov.as_matrix() - 0.5 * a @ a.T)
        return cls(gain, noise_mean if noise_mean is not None else Quadratures(), noise)

    def output_covariance(self, cov_in=None):
        """Output covariance for input covariance ``cov_in`` (vacuum by default)."""
        if cov_in is None:
            cov_in = CovarianceMatrix.vacuum()
        return propagate_covariance(self.gain, cov_in, self.noise_cov)

    def output_mean(self, alpha):
        """Output quadrature means for the coherent input ``|alpha>``."""
        y_in = Quadratures.from_amplitude(alpha).as_array()
        return Quadratures.from_array(self.gain.as_matrix() @ y_in + self.noise_mean.as_array())

    def ellipse(self):
        return ellipse_from_covariance(self.output_covariance())

    def complex_gains(self):
        return complex_gains(self.gain)

    def rotated(self, phi):
        """Conjugate by a phase-space rotation, ``R(phi) o E o R(-phi)``."""
        r = rotation_matrix(phi)
        return GaussianChannel(
            GainMatrix.from_matrix(r @ self.gain.as_matrix() @ r.T),
            Quadratures.from_array(r @ self.noise_mean.as_array()),
            self.noise_cov.rotated(phi),
            Quadratures.from_array(r @ self.offset.as_array()),
        )

    def then_rotate(self, phi):
        """Follow the channel by a phase-space rotation, ``R(phi) o E``."""
        r = rotation_matrix(phi)
        return GaussianChannel(
            GainMatrix.from_matrix(r @ self.gain.as_matrix()),
            Quadratures.from_array(r @ self.noise_mean.as_array()),
            self.noise_cov.rotated(phi),
            Quadratures.from_array(r @ self.offset.as_array()),
        )

    # -- serialisation -------------------------------------------------
    def to_dict(self):
        g = self.gain
        out = {
            "gain": [g.a11, g.a12, g.a21, g.a22],
            "noise_mean": [self.noise_mean.x, self.noise_mean.p],
            "noise_cov": {
                "sxx": self.noise_cov.sxx,
                "spp": self.noise_cov.spp,
                "cxp": self.noise_cov.cxp,
            },
        }
        if not self.offset.is_zero():
            out["offset"] = [self.offset.x, self.offset.p]
        return out

    @classmethod
    def from_dict(cls, data):
        """Parse the channel JSON object; raises ValueError on schema violations."""
        if not isinstance(data, dict):
            raise ValueError("channel must be a JSON object")
        missing = {"gain", "noise_mean", "noise_cov"} - data.keys()
        if missing:
            raise ValueError(f"channel JSON missing keys: {sorted(missing)}")
        unknown = data.keys() - {"gain", "noise_mean", "noise_cov", "offset"}
        if unknown:
            raise ValueError(f"channel JSON has unknown keys: {sorted(unknown)}")
        gain = _float_list(data["gain"], 4, "gain")
        mean = _float_list(data["noise_mean"], 2, "noise_mean")
        cov = data["noise_cov"]
        if not isinstance(cov, dict) or set(cov) != {"sxx", "spp", "cxp"}:
            raise ValueError('noise_cov must be an object with keys "sxx", "spp", "cxp"')
        offset = _float_list(data.get("offset", [0.0, 0.0]), 2, "offset")
        return cls(
            GainMatrix(*gain),
            Quadratures(*mean),
            CovarianceMatrix(*(_as_float(cov[k], f"noise_cov.{k}") for k in ("sxx", "spp", "cxp"))),
            Quadratures(*offset),
        )

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _as_float(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{name} must be a number, got {value!r}")
    return check_finite(value, name)


def _float_list(value, length, name):
    if not isinstance(value, list) or len(value) != length:
        raise ValueError(f"{name} must be a list of {length} numbers")
    return [_as_float(v, f"{name}[{i}]") for i, v in enumerate(value)]


def propagate_covariance(gain, cov_in, noise_cov):
    """Return ``A V_in A^T + V_F``."""
    a = gain.as_matrix()
    return CovarianceMatrix.from_matrix(a @ cov_in.as_matrix() @ a.T + noise_cov.as_matrix())


def ellipse_from_covariance(cov):
    """Decompose a positive-definite covariance into its noise ellipse.

    The orientation follows ``tan(2 theta) = 2 Cxp / (Vxx - Vpp)`` with the
    quadrant fixed by the sign of ``Cxp``.  An isotropic covariance with
    ``Cxp = 0`` is assigned ``theta = 0``.

    Raises
    ------
    NonPositiveCovariance
        If ``cov`` is not positive-definite.
    """
    if not cov.is_positive_definite():
        raise NonPositiveCovariance(
            f"covariance ({cov.sxx}, {cov.spp}, {cov.cxp}) is not positive-definite"
        )
    mean = 0.5 * (cov.sxx + cov.spp)
    half_diff = 0.5 * (cov.sxx - cov.spp)
    delta = math.hypot(half_diff, cov.cxp)
    if delta == 0.0:
        theta = 0.0
    else:
        theta = 0.5 * math.atan2(2.0 * cov.cxp, cov.sxx - cov.spp)
    s1 = mean + delta
    # s1 * s2 = det is better conditioned than mean - delta for thin ellipses
    s2 = cov.det / s1
    return NoiseEllipse(s1, min(s2, s1), theta)


def covariance_from_ellipse(e):
    """Inverse of :func:`ellipse_from_covariance`."""
    c, s = math.cos(e.theta), math.sin(e.theta)
    if e.is_circle:
        return CovarianceMatrix(e.s1sq, e.s1sq, 0.0)
    return CovarianceMatrix(
        e.s1sq * c * c + e.s2sq * s * s,
        e.s1sq * s * s + e.s2sq * c * c,
        (e.s1sq - e.s2sq) * s * c,
    )


def complex_gains(gain):
    """Complex-amplitude form ``(C, D)`` of a real gain matrix."""
    c = 0.5 * complex(gain.a11 + gain.a22, gain.a21 - gain.a12)
    d = 0.5 * complex(gain.a11 - gain.a22, gain.a21 + gain.a12)
    return ComplexGains(c, d)


def check_physical(ch, tol=EIG_TOL):
    """Test whether ``ch`` is a completely positive Gaussian map.

    Physicality requires the noise covariance to be positive-semidefinite
    and ``det(V_F) >= (1 - det A)^2 / 4``, which together are equivalent to
    ``V_F + i (1 - det A) Omega / 2 >= 0``.  For diagonal gain the weaker
    per-quadrature bounds ``2 Var(X_out) >= A11^2`` and
    ``2 Var(P_out) >= A22^2`` are reported as well.  Never raises.
    """
    noise = ch.noise_cov
    min_eig = noise.min_eigenvalue()
    margin = noise.det - 0.25 * (1.0 - ch.gain.det) ** 2
    quad = None
    if ch.gain.is_diagonal():
        out = ch.output_covariance()
        quad = (2 * out.sxx - ch.gain.a11**2, 2 * out.spp - ch.gain.a22**2)
    return PhysicalityReport(min_eig, margin, quad, tol)


def subtract_noise_mean(ch):
    """Remove ``<F>`` by a displacement, recording it in ``offset``."""
    if ch.noise_mean.is_zero():
        return ch
    offset = Quadratures.from_array(ch.offset.as_array() + ch.noise_mean.as_array())
    return replace(ch, noise_mean=Quadratures(), offset=offset)


def random_physical_channel(rng, max_gain=2.0, var_range=(0.5, 3.0), max_tries=100_000):
    """Draw a physical channel by rejection sampling.

    Gain entries are uniform in ``[-max_gain, max_gain]`` and the output
    ellipse variances uniform in ``var_range`` with a uniform orientation.
    Draws that are unphysical or sub-Heisenberg are rejected.
    """
    lo, hi = var_range
    for _ in range(max_tries):
        gain = GainMatrix(*rng.uniform(-max_gain, max_gain, size=4))
        s = np.sort(rng.uniform(lo, hi, size=2))[::-1]
        if s[0] * s[1] < 0.25:
            continue
        ellipse = NoiseEllipse(s[0], s[1], rng.uniform(-math.pi / 2, math.pi / 2))
        ch = GaussianChannel.from_output(gain, ellipse)
        if check_physical(ch, tol=0.0).physical:
            return ch
    raise RuntimeError("rejection sampling failed to find a physical channel")
