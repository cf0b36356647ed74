"""Closed-form average fidelity of Fock-encoded qubits under Gaussian channels.

The qubit lives in span{|0>, |1>}.  Its average fidelity depends on the
channel only through the complex gains ``(C, D)``, the output noise
ellipse ``(s1sq, s2sq, theta)`` and ``D~ = D exp(-2 i theta)``.

Two different angles appear in this problem.  Here ``theta`` always means
the orientation of the noise ellipse; Bloch-sphere angles live in
:class:`gaussfid.fock.QubitState` as ``bloch_theta`` / ``bloch_phi``.
"""

from dataclasses import dataclass
import cmath
import math
from typing import NamedTuple
import warnings

import numpy as np

from .core import ComplexGains, NoiseEllipse, check_physical
from .exceptions import (
    DegenerateRotation,
    NonzeroNoiseMean,
    NumericalInconsistency,
    PhysicalityWarning,
    SubHeisenbergEllipse,
    UnphysicalChannel,
    UnphysicalParameters,
)

__all__ = [
    "FidelityInputs",
    "SqueezedThermalParams",
    "MatrixElementSet",
    "PhaseOptimum",
    "params_from_ellipse",
    "sts_matrix_elements",
    "average_qubit_fidelity",
    "qubit_fidelity",
    "fidelity_symmetric",
    "fidelity_asymmetric_diagonal",
    "noiseless_amplifier_fidelity",
    "optimal_phase_rotation",
]

CLAMP_TOL = 1e-9
HEISENBERG_TOL = 1e-10


@dataclass(frozen=True)
class FidelityInputs:
    """Gains and output ellipse of a zero-mean physical channel."""

    gains: ComplexGains
    ellipse: NoiseEllipse

    @classmethod
    def from_channel(cls, ch):
        """Validate ``ch`` and extract the quantities the fidelity needs.

        Raises
        ------
        NonzeroNoiseMean
            If the channel still carries a noise mean; route it through
            :func:`gaussfid.core.subtract_noise_mean` first.
        UnphysicalChannel
            If :func:`gaussfid.core.check_physical` fails.
        """
        if not ch.noise_mean.is_zero():
            raise NonzeroNoiseMean(
                "fidelity requires <F> = 0; apply subtract_noise_mean first"
            )
        report = check_physical(ch)
        if not report.physical:
            raise UnphysicalChannel("channel violates the physicality constraints", report)
        if report.quadrature_ok is False:
            warnings.warn(
                "channel passes the matrix physicality test but not the "
                "per-quadrature bounds",
                PhysicalityWarning,
                stacklevel=2,
            )
        return cls(ch.complex_gains(), ch.ellipse())

    @property
    def dtilde(self):
        return self.gains.d * cmath.exp(-2j * self.ellipse.theta)


@dataclass(frozen=True)
class SqueezedThermalParams:
    """Thermal occupation and squeezing giving a prescribed ellipse.

    ``s1sq = (nbar0 + 1/2) exp(-2r)`` and ``s2sq = (nbar0 + 1/2) exp(2r)``,
    so ``r <= 0`` whenever ``s1sq >= s2sq``.
    """

    nbar0: float
    r: float

    def __post_init__(self):
        if not (math.isfinite(self.nbar0) and math.isfinite(self.r)) or self.nbar0 < 0:
            raise UnphysicalParameters("nbar0 must be finite and >= 0, r finite")

    @classmethod
    def from_variances(cls, sx_sq, sp_sq):
        """Unrotated state with ``Var(X) = sx_sq`` and ``Var(P) = sp_sq`` (any order)."""
        prod = sx_sq * sp_sq
        if not (sx_sq > 0 and sp_sq > 0) or prod < 0.25 - HEISENBERG_TOL:
            raise SubHeisenbergEllipse(f"variance product {prod} is below the Heisenberg bound 1/4")
        return cls(max(math.sqrt(prod) - 0.5, 0.0), 0.25 * math.log(sp_sq / sx_sq))

    def variances(self):
        base = self.nbar0 + 0.5
        return base * math.exp(-2 * self.r), base * math.exp(2 * self.r)


class MatrixElementSet(NamedTuple):
    """Fock matrix elements of the unrotated squeezed thermal state."""

    rho00: float
    rho11: float
    rho02: float
    rho22: float
    rho13: float


class PhaseOptimum(NamedTuple):
    theta_prime: float
    fq_max: float
    fq_min: float


def _variances(state):
    if isinstance(state, SqueezedThermalParams):
        return state.variances()
    return state.s1sq, state.s2sq


def _check_heisenberg(e):
    prod = e.s1sq * e.s2sq
    if prod < 0.25 - HEISENBERG_TOL:
        raise SubHeisenbergEllipse(
            f"s1sq * s2sq = {prod} is below the Heisenberg bound 1/4"
        )
    return max(prod, 0.25)


def params_from_ellipse(e):
    """Squeezed-thermal parameters ``(nbar0, r)`` reproducing ellipse ``e``."""
    _check_heisenberg(e)
    return SqueezedThermalParams.from_variances(e.s1sq, e.s2sq)


def sts_matrix_elements(e):
    """Closed-form ``<n|rho_STS|m>`` for the elements entering the fidelity.

    ``e`` is a :class:`NoiseEllipse` (only its variances matter; the state
    is the unrotated one) or a :class:`SqueezedThermalParams`, which also
    allows ``Var(X) < Var(P)``.
    """
    s1, s2 = _variances(e)
    prod = max(s1 * s2, 0.25)
    if s1 * s2 < 0.25 - HEISENBERG_TOL:
        raise SubHeisenbergEllipse(f"s1sq * s2sq = {s1 * s2} is below the Heisenberg bound 1/4")
    q = (s1 + 0.5) * (s2 + 0.5)
    excess = prod - 0.25
    diff = s1 - s2
    return MatrixElementSet(
        rho00=1.0 / math.sqrt(q),
        rho11=excess / q**1.5,
        rho02=diff / (2.0 * math.sqrt(2.0) * q**1.5),
        rho22=(excess**2 + diff**2 / 8.0) / q**2.5,
        rho13=math.sqrt(6.0) * excess * diff / (4.0 * q**2.5),
    )


def _clamp(value, what="fidelity"):
    if value < -CLAMP_TOL or value > 1 + CLAMP_TOL:
        raise NumericalInconsistency(
            f"{what} evaluated to {value!r}, outside [0, 1]; "
            "the channel parameters are inconsistent"
        )
    return min(max(value, 0.0), 1.0)


def _general_formula(c, dt_conj, s1, s2):
    q1 = s1 + 0.5
    q2 = s2 + 0.5
    q = q1 * q2
    u = c + dt_conj
    v = c - dt_conj
    u2 = abs(u) ** 2
    v2 = abs(v) ** 2
    bracket = (
        3.0
        + 3.0 * (s1 * s2 - 0.25) / q
        + u.real / q1
        + v.real / q2
        - u2 * (s1 - 1.0) / q1**2
        - v2 * (s2 - 1.0) / q2**2
        - (u2 * (s2 - 0.5) + v2 * (s1 - 0.5)) / (2.0 * q)
    )
    return bracket / (6.0 * math.sqrt(q))


def average_qubit_fidelity(inp, phase=0.0):
    """Average fidelity over the Bloch sphere of the {|0>, |1>} qubit.

    Parameters
    ----------
    inp : FidelityInputs
    phase : float, optional
        Phase rotation applied after the channel.  It enters through
        ``C -> C exp(i phase)`` and ``D~* -> D~* exp(i phase)``.

    Raises
    ------
    NumericalInconsistency
        If the raw value lies outside ``[-1e-9, 1 + 1e-9]``.
    """
    e = inp.ellipse
    _check_heisenberg(e)
    rot = cmath.exp(1j * phase)
    raw = _general_formula(inp.gains.c * rot, inp.dtilde.conjugate() * rot, e.s1sq, e.s2sq)
    return _clamp(raw)


def qubit_fidelity(ch, optimize_phase=False):
    """Fidelity of a channel, optionally maximised over an output phase."""
    inp = FidelityInputs.from_channel(ch)
    if optimize_phase:
        return optimal_phase_rotation(inp).fq_max
    return average_qubit_fidelity(inp)


def optimal_phase_rotation(inp):
    """Output phase rotation that extremises the average fidelity.

    The extremum condition fixes ``exp(2 i theta')`` only, so both branches
    ``theta'`` and ``theta' + pi`` are evaluated and the larger one is
    returned as the optimum.  ``theta_prime`` is reported in ``[0, 2 pi)``.

    If both linear coefficients vanish the fidelity does not depend on the
    rotation; a :class:`DegenerateRotation` warning is issued and
    ``theta_prime = 0`` is returned.
    """
    e = inp.ellipse
    q1 = e.s1sq + 0.5
    q2 = e.s2sq + 0.5
    c = inp.gains.c
    dt = inp.dtilde
    numerator = (c.conjugate() + dt) * q2 + (c.conjugate() - dt) * q1
    denominator = (c + dt.conjugate()) * q2 + (c - dt.conjugate()) * q1
    scale = abs(c) + abs(dt) + 1.0
    if abs(denominator) <= 1e-14 * scale:
        warnings.warn(
            "fidelity is independent of the output phase", DegenerateRotation, stacklevel=2
        )
        flat = average_qubit_fidelity(inp)
        return PhaseOptimum(0.0, flat, flat)
    half = 0.5 * cmath.phase(numerator / denominator)
    branches = [half % (2 * math.pi), (half + math.pi) % (2 * math.pi)]
    values = [average_qubit_fidelity(inp, phase=t) for t in branches]
    best = int(np.argmax(values))
    return PhaseOptimum(branches[best], values[best], values[1 - best])


def fidelity_symmetric(g, sigma_sq):
    """Fidelity for gain ``diag(g, g)`` and isotropic output variance.

    Accepts scalars or broadcastable arrays.

    Raises
    ------
    UnphysicalParameters
        If ``sigma_sq < max(1/2, g^2 - 1/2)`` beyond 1e-10, i.e. the noise
        cannot preserve the output commutator.
    """
    g = np.asarray(g, dtype=float)
    s = np.asarray(sigma_sq, dtype=float)
    bound = np.maximum(0.5, g**2 - 0.5)
    if np.any(s < bound - HEISENBERG_TOL):
        raise UnphysicalParameters(
            "isotropic channel requires sigma^2 >= max(1/2, g^2 - 1/2)"
        )
    num = 6 * s**2 + 3 * s + g * (2 * s + 1) - g**2 * (3 * s - 2.5)
    val = num / (6 * (s + 0.5) ** 3)
    if np.any(val < -CLAMP_TOL) or np.any(val > 1 + CLAMP_TOL):
        raise NumericalInconsistency("symmetric fidelity outside [0, 1]")
    val = np.clip(val, 0.0, 1.0)
    return float(val) if val.ndim == 0 else val


def fidelity_asymmetric_diagonal(gx, gp, sx_sq, sp_sq):
    """Fidelity for diagonal gain ``diag(gx, gp)`` and diagonal output covariance.

    Raises
    ------
    UnphysicalParameters
        If ``sx_sq * sp_sq < 1/4``, ``2 sx_sq < gx^2`` or ``2 sp_sq < gp^2``
        beyond tolerance.
    """
    gx = np.asarray(gx, dtype=float)
    gp = np.asarray(gp, dtype=float)
    sx = np.asarray(sx_sq, dtype=float)
    sp = np.asarray(sp_sq, dtype=float)
    tol = HEISENBERG_TOL
    if np.any(sx * sp < 0.25 - tol):
        raise UnphysicalParameters("sx_sq * sp_sq must be >= 1/4")
    if np.any(2 * sx < gx**2 - tol) or np.any(2 * sp < gp**2 - tol):
        raise UnphysicalParameters("noise variances must satisfy 2 s^2 >= g^2")
    qx = sx + 0.5
    qp = sp + 0.5
    q = qx * qp
    bracket = (
        3
        + 3 * (sx * sp - 0.25) / q
        + gx / qx
        + gp / qp
        - gx**2 * (sx - 1) / qx**2
        - gp**2 * (sp - 1) / qp**2
        - (gx**2 * (sp - 0.5) + gp**2 * (sx - 0.5)) / (2 * q)
    )
    val = bracket / (6 * np.sqrt(q))
    if np.any(val < -CLAMP_TOL) or np.any(val > 1 + CLAMP_TOL):
        raise NumericalInconsistency("asymmetric fidelity outside [0, 1]")
    val = np.clip(val, 0.0, 1.0)
    return float(val) if val.ndim == 0 else val


def noiseless_amplifier_fidelity(r):
    """Fidelity of the minimum-noise degenerate parametric amplifier, gain ``G = e^r``."""
    r = np.asarray(r, dtype=float)
    val = (
        math.sqrt(2)
        / 3
        * (np.cosh(2 * r) + 2 * np.cosh(r) + 3)
        / (1 + np.cosh(2 * r)) ** 1.5
    )
    return float(val) if val.ndim == 0 else val
