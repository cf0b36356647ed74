"""Brute-force reference computations on a truncated Fock space.

Everything here is deliberately independent of the closed-form results in
:mod:`gaussfid.fidelity`: output states are built as dense matrices from
matrix exponentials, the channel's action on ``|n><m|`` (n, m in {0, 1})
is recovered by finite differences in the coherent amplitude, and the
squeezed-thermal matrix elements are integrated numerically from the
Fock expansion of squeezed coherent states.
"""

from dataclasses import dataclass
import math

import numpy as np
from numpy.polynomial import hermite as npherm
from scipy.linalg import expm
from scipy.special import gammaln

from ._validation import check_complex, check_dim, check_finite, check_nonnegative, check_step
from .core import CovarianceMatrix, Quadratures
from .exceptions import (
    NonzeroNoiseMean,
    QuadratureNotConverged,
    StepTooLarge,
    TruncationTooSmall,
)
from .fidelity import SqueezedThermalParams, params_from_ellipse

__all__ = [
    "DEFAULT_DIM",
    "DEFAULT_STEP",
    "FockOperator",
    "QubitState",
    "QubitBlocks",
    "ladder_operators",
    "gaussian_unitaries",
    "thermal_state",
    "rotated_squeezed_thermal_state",
    "output_state",
    "quadrature_moments",
    "channel_on_qubit_basis",
    "channel_on_qubit_basis_operator",
    "fidelity_bruteforce",
    "pointwise_qubit_fidelity",
    "squeezed_coherent_amplitude",
    "matrix_element_integral",
]

DEFAULT_DIM = 40
DEFAULT_STEP = 1e-3
GUARD_LEVELS = 8
TRUNCATION_TOL = 1e-6
RICHARDSON_TOL = 1e-5
QUADRATURE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Dense operator on the number basis ``|0>, ..., |dim - 1>``."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"operator must be square, got shape {arr.shape}")
        check_dim(arr.shape[0])
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self):
        return self.entries.shape[0]

    def __getitem__(self, idx):
        return self.entries[idx]

    def __matmul__(self, other):
        other = other.entries if isinstance(other, FockOperator) else other
        return FockOperator(self.entries @ other)

    @property
    def dag(self):
        return FockOperator(self.entries.conj().T)

    def trace(self):
        return complex(np.trace(self.entries))

    def hermiticity_defect(self):
        return float(np.abs(self.entries - self.entries.conj().T).max())

    def is_density_matrix(self, herm_tol=1e-12, trace_tol=1e-9, eig_tol=1e-9):
        """Check Hermiticity, sub-unit trace and positivity."""
        if self.hermiticity_defect() > herm_tol:
            return False
        tr = self.trace()
        if abs(tr.imag) > herm_tol or tr.real > 1 + trace_tol:
            return False
        herm = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.linalg.eigvalsh(herm)[0]) >= -eig_tol


@dataclass(frozen=True)
class QubitState:
    """Pure qubit ``cos(t/2)|0> + exp(i p) sin(t/2)|1>`` on the Bloch sphere."""

    bloch_theta: float
    bloch_phi: float = 0.0

    def __post_init__(self):
        t = check_finite(self.bloch_theta, "bloch_theta")
        p = check_finite(self.bloch_phi, "bloch_phi")
        if not 0.0 <= t <= math.pi:
            raise ValueError(f"bloch_theta must lie in [0, pi], got {t}")
        object.__setattr__(self, "bloch_theta", t)
        object.__setattr__(self, "bloch_phi", p % (2 * math.pi))

    def amplitudes(self):
        return np.array(
            [
                math.cos(self.bloch_theta / 2),
                np.exp(1j * self.bloch_phi) * math.sin(self.bloch_theta / 2),
            ]
        )

    def ket(self, dim=2):
        v = np.zeros(dim, dtype=complex)
        v[:2] = self.amplitudes()
        return v


def ladder_operators(dim):
    """Truncated annihilation and creation operators."""
    dim = check_dim(dim)
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)
    return FockOperator(a), FockOperator(a.conj().T)


def _generators(dim):
    a = ladder_operators(dim)[0].entries
    ad = a.conj().T
    return a, ad


def _unitaries(dim, alpha_bar, r, theta):
    a, ad = _generators(dim)
    disp = expm(alpha_bar * ad - np.conj(alpha_bar) * a)
    squeeze = expm(0.5 * r * (a @ a - ad @ ad))
    rot = np.diag(np.exp(1j * theta * np.arange(dim)))
    return disp, squeeze, rot


def gaussian_unitaries(dim, alpha_bar=0.0, r=0.0, theta=0.0, check_levels=GUARD_LEVELS):
    """Displacement, squeezing and rotation operators on a truncated basis.

    ``D = exp(alpha_bar a^dag - alpha_bar* a)``,
    ``S = exp(r/2 (a^2 - a^dag^2))`` and ``R = exp(i theta a^dag a)``.

    The exponential of a truncated anti-Hermitian generator is exactly
    unitary, so truncation error is measured instead by repeating the
    construction on a basis enlarged by ``GUARD_LEVELS`` and comparing the
    lowest ``check_levels`` rows and columns.

    Raises
    ------
    TruncationTooSmall
        If that comparison differs by more than 1e-6.
    """
    dim = check_dim(dim)
    alpha_bar = check_complex(alpha_bar, "alpha_bar")
    r = check_finite(r, "r")
    theta = check_finite(theta, "theta")
    ops = _unitaries(dim, alpha_bar, r, theta)
    big = _unitaries(dim + GUARD_LEVELS, alpha_bar, r, theta)
    k = min(check_levels, dim)
    for name, small, large in zip("DSR", ops, big):
        defect = float(np.abs(small[:k, :k] - large[:k, :k]).max())
        if defect > TRUNCATION_TOL:
            raise TruncationTooSmall(
                f"{name} operator not converged at dim={dim} "
                f"(low-level defect {defect:.2e}); increase dim"
            )
    return tuple(FockOperator(u) for u in ops)


def thermal_state(nbar0, dim):
    """Truncated thermal state; the missing tail weight is not renormalised."""
    nbar0 = check_nonnegative(nbar0, "nbar0")
    dim = check_dim(dim)
    n = np.arange(dim)
    if nbar0 == 0.0:
        pops = (n == 0).astype(float)
    else:
        pops = np.exp(n * math.log(nbar0) - (n + 1) * math.log1p(nbar0))
    return FockOperator(np.diag(pops))


def rotated_squeezed_thermal_state(ellipse, dim):
    """``R(theta) S(r) rho_0 S^dag R^dag`` with the noise of ``ellipse``."""
    params = params_from_ellipse(ellipse)
    _, s, rot = gaussian_unitaries(dim, 0.0, params.r, ellipse.theta)
    u = rot.entries @ s.entries
    rho0 = thermal_state(params.nbar0, dim).entries
    return FockOperator(u @ rho0 @ u.conj().T)


def _displace(rho_r, alpha_bar):
    dim = rho_r.shape[0]
    a, ad = _generators(dim)
    d = expm(alpha_bar * ad - np.conj(alpha_bar) * a)
    return d @ rho_r @ d.conj().T


def _require_zero_mean(ch):
    if not ch.noise_mean.is_zero():
        raise NonzeroNoiseMean("oracle requires <F> = 0; apply subtract_noise_mean first")


def output_state(ch, alpha, dim=DEFAULT_DIM):
    """Output density matrix for the coherent input ``|alpha>``.

    Builds ``D(alpha_bar) R(theta) S(r) rho_0 S^dag R^dag D^dag`` with
    ``alpha_bar = C alpha + D alpha*``.
    """
    _require_zero_mean(ch)
    alpha = check_complex(alpha, "alpha")
    ellipse = ch.ellipse()
    rho_r = rotated_squeezed_thermal_state(ellipse, dim)
    alpha_bar = complex(ch.complex_gains().apply(alpha))
    gaussian_unitaries(dim, alpha_bar)  # truncation check for the displacement
    return FockOperator(_displace(rho_r.entries, alpha_bar))


def quadrature_moments(rho):
    """Means and covariance of ``X``, ``P`` evaluated by traces against ``rho``."""
    m = rho.entries if isinstance(rho, FockOperator) else np.asarray(rho)
    a, ad = _generators(m.shape[0])
    x = (a + ad) / math.sqrt(2)
    p = -1j * (a - ad) / math.sqrt(2)

    def expval(op):
        return np.trace(m @ op).real

    mx, mp = expval(x), expval(p)
    # x @ x on a truncated basis is wrong in the last level only
    cov = CovarianceMatrix(
        expval(x @ x) - mx**2,
        expval(p @ p) - mp**2,
        expval(0.5 * (x @ p + p @ x)) - mx * mp,
    )
    return Quadratures(mx, mp), cov


@dataclass(frozen=True)
class QubitBlocks:
    """Images ``E(|n><m|)`` of the four qubit basis operators.

    ``richardson_defect`` is the max-norm difference between the step-h and
    step-h/2 finite-difference estimates (0 for constructions that do not
    difference).
    """

    e00: FockOperator
    e01: FockOperator
    e10: FockOperator
    e11: FockOperator
    richardson_defect: float = 0.0

    def image(self, psi):
        """``E(|psi><psi|)`` for ``psi = c0|0> + c1|1>``, by linearity."""
        c0, c1 = complex(psi[0]), complex(psi[1])
        out = (
            abs(c0) ** 2 * self.e00.entries
            + c0 * c1.conjugate() * self.e01.entries
            + c1 * c0.conjugate() * self.e10.entries
            + abs(c1) ** 2 * self.e11.entries
        )
        return FockOperator(out)

    def average_fidelity(self):
        """Bloch-sphere average, assembled from the basis images."""
        val = (
            (self.e00[0, 0] + self.e11[1, 1]) / 3
            + (self.e01[0, 1] + self.e10[1, 0]) / 6
            + (self.e00[1, 1] + self.e11[0, 0]) / 6
        )
        if abs(val.imag) > 1e-9:
            raise ArithmeticError(f"average fidelity has imaginary part {val.imag:.3e}")
        return float(val.real)

    def pointwise_fidelity(self, bloch_theta, bloch_phi):
        """``<psi|E(|psi><psi|)|psi>``; vectorised over the Bloch angles."""
        t = np.asarray(bloch_theta, dtype=float)
        p = np.asarray(bloch_phi, dtype=float)
        c0 = np.cos(t / 2)
        c1 = np.exp(1j * p) * np.sin(t / 2)
        blocks = [self.e00, self.e01, self.e10, self.e11]
        weights = [
            np.abs(c0) ** 2,
            c0 * np.conj(c1),
            c1 * np.conj(c0),
            np.abs(c1) ** 2,
        ]
        total = np.zeros(np.broadcast(t, p).shape, dtype=complex)
        for w, blk in zip(weights, blocks):
            b = blk.entries[:2, :2]
            quad = (
                np.conj(c0) * b[0, 0] * c0
                + np.conj(c0) * b[0, 1] * c1
                + np.conj(c1) * b[1, 0] * c0
                + np.conj(c1) * b[1, 1] * c1
            )
            total = total + w * quad
        val = total.real
        return float(val) if val.ndim == 0 else val


def _stencil_derivatives(func, h):
    f0 = func(0.0)
    fxp, fxm = func(h), func(-h)
    fyp, fym = func(1j * h), func(-1j * h)
    dx = (fxp - fxm) / (2 * h)
    dy = (fyp - fym) / (2 * h)
    lap = (fxp + fxm + fyp + fym - 4 * f0) / h**2
    d_alpha = 0.5 * (dx - 1j * dy)
    d_alpha_conj = 0.5 * (dx + 1j * dy)
    d_mixed = 0.25 * lap
    return f0, d_alpha, d_alpha_conj, d_mixed


def channel_on_qubit_basis(ch, dim=DEFAULT_DIM, h=DEFAULT_STEP):
    """Recover ``E(|n><m|)`` for n, m in {0, 1} by differencing coherent outputs.

    With ``E(alpha) = E(|alpha><alpha|)``:

    * ``E(|0><0|) = E(0)``
    * ``E(|1><0|) = dE/dalpha``, ``E(|0><1|) = dE/dalpha*``
    * ``E(|1><1|) = (1 + d^2/dalpha dalpha*) E`` at ``alpha = 0``

    The Wirtinger derivatives are combined from second-order central
    differences along Re(alpha) and Im(alpha).  The estimates at steps
    ``h`` and ``h/2`` are Richardson-extrapolated; their raw disagreement
    is the convergence diagnostic.

    Raises
    ------
    StepTooLarge
        If the step-h and step-h/2 estimates differ by more than 1e-5.
    """
    _require_zero_mean(ch)
    dim = check_dim(dim)
    h = check_step(h)
    gains = ch.complex_gains()
    rho_r = rotated_squeezed_thermal_state(ch.ellipse(), dim).entries
    a, ad = _generators(dim)
    cache = {}

    def state(alpha):
        key = complex(alpha)
        if key not in cache:
            ab = complex(gains.apply(key))
            d = expm(ab * ad - np.conj(ab) * a)
            cache[key] = d @ rho_r @ d.conj().T
        return cache[key]

    coarse = _stencil_derivatives(state, h)
    fine = _stencil_derivatives(state, h / 2)
    defect = max(float(np.abs(c - f).max()) for c, f in zip(coarse[1:], fine[1:]))
    if defect > RICHARDSON_TOL:
        raise StepTooLarge(
            f"finite differences at h={h} and h/2 disagree by {defect:.2e}; reduce h"
        )
    e0 = coarse[0]
    d_a, d_ac, d_mix = ((4 * f - c) / 3 for c, f in zip(coarse[1:], fine[1:]))
    return QubitBlocks(
        e00=FockOperator(e0),
        e01=FockOperator(d_ac),
        e10=FockOperator(d_a),
        e11=FockOperator(e0 + d_mix),
        richardson_defect=defect,
    )


def channel_on_qubit_basis_operator(ch, dim=DEFAULT_DIM):
    """Second construction of ``E(|n><m|)`` from ladder-operator identities.

    Derivatives with respect to ``alpha`` are carried to the output
    amplitude ``alpha_bar = C alpha + D alpha*`` by the chain rule, and the
    derivatives of ``D(alpha_bar) rho_r D^dag(alpha_bar)`` at the origin are
    commutator-like expressions in ``a`` and ``a^dag``.
    """
    _require_zero_mean(ch)
    dim = check_dim(dim)
    g = ch.complex_gains()
    c, d = g.c, g.d
    rho = rotated_squeezed_thermal_state(ch.ellipse(), dim).entries
    a, ad = _generators(dim)
    d_bar = ad @ rho - rho @ ad
    d_bar_conj = -a @ rho + rho @ a
    d2_bar = ad @ ad @ rho - 2 * ad @ rho @ ad + rho @ ad @ ad
    d2_bar_conj = a @ a @ rho - 2 * a @ rho @ a + rho @ a @ a
    d2_mixed = -ad @ a @ rho + ad @ rho @ a + a @ rho @ ad - rho @ a @ ad
    e10 = c * d_bar + np.conj(d) * d_bar_conj
    e01 = d * d_bar + np.conj(c) * d_bar_conj
    mixed = (
        c * d * d2_bar
        + (abs(c) ** 2 + abs(d) ** 2) * d2_mixed
        + np.conj(c * d) * d2_bar_conj
    )
    return QubitBlocks(
        e00=FockOperator(rho),
        e01=FockOperator(e01),
        e10=FockOperator(e10),
        e11=FockOperator(rho + mixed),
    )


def fidelity_bruteforce(ch, dim=DEFAULT_DIM, h=DEFAULT_STEP):
    """Average qubit fidelity from finite-difference channel images."""
    return channel_on_qubit_basis(ch, dim, h).average_fidelity()


def pointwise_qubit_fidelity(ch, q, dim=DEFAULT_DIM, h=DEFAULT_STEP):
    """Fidelity ``<psi|E(|psi><psi|)|psi>`` for one Bloch-sphere state."""
    blocks = channel_on_qubit_basis(ch, dim, h)
    return blocks.pointwise_fidelity(q.bloch_theta, q.bloch_phi)


def _squeezed_polynomial(n, r, gamma):
    # (tanh(r)/2)^(n/2) H_n(gamma / sqrt(sinh 2r)) written as a polynomial in
    # gamma; the expansion is regular at r = 0 and real for r < 0
    coeffs = npherm.herm2poly([0] * n + [1])
    sinh2r = math.sinh(2 * r)
    scale = (2 * math.cosh(r)) ** -n
    out = np.zeros_like(np.asarray(gamma, dtype=complex))
    for k in range(n // 2 + 1):
        power = n - 2 * k
        out = out + coeffs[power] * sinh2r**k * np.asarray(gamma, dtype=complex) ** power
    return scale * out


def squeezed_coherent_amplitude(n, r, gamma):
    """``<n|S(r)|gamma>`` from its Hermite-polynomial Fock expansion."""
    gamma = np.asarray(gamma, dtype=complex)
    envelope = np.exp(-0.5 * np.abs(gamma) ** 2 + 0.5 * gamma**2 * math.tanh(r))
    norm = math.exp(-0.5 * gammaln(n + 1)) / math.sqrt(math.cosh(r))
    return norm * envelope * _squeezed_polynomial(n, r, gamma)


def _sts_quadrature(n, m, nbar0, r, points):
    # Gaussian part of the integrand is exp(-ax x^2 - ay y^2) with
    # ax, ay = 1/nbar0 + 1 -+ tanh r; rescaling to exp(-u^2 - v^2) leaves a
    # polynomial for Gauss-Hermite, and nbar0 -> 0 stays finite
    t = math.tanh(r)
    bx = 1.0 + nbar0 * (1.0 - t)
    by = 1.0 + nbar0 * (1.0 + t)
    nodes, weights = npherm.hermgauss(points)
    x = nodes * math.sqrt(nbar0 / bx)
    y = nodes * math.sqrt(nbar0 / by)
    gamma = x[:, None] + 1j * y[None, :]
    pn = _squeezed_polynomial(n, r, gamma)
    pm = _squeezed_polynomial(m, r, gamma)
    w = weights[:, None] * weights[None, :]
    total = np.sum(w * pn * np.conj(pm))
    norm = math.exp(-0.5 * (gammaln(n + 1) + gammaln(m + 1))) / math.cosh(r)
    return norm * total / (math.pi * math.sqrt(bx * by))


def matrix_element_integral(n, m, e, quad_points=64):
    """``<n|rho_STS|m>`` by numerical integration over the thermal P-function.

    Integrates ``(1/(pi nbar0)) exp(-|g|^2/nbar0) <n|S(r)|g><g|S^dag(r)|m>``
    over the complex plane with a tensor Gauss-Hermite rule, after
    rescaling each axis to the Gaussian envelope of the integrand.

    ``e`` is a :class:`NoiseEllipse` or a :class:`SqueezedThermalParams`.

    Raises
    ------
    QuadratureNotConverged
        If doubling ``quad_points`` changes the result by more than 1e-8.
    """
    if not (0 <= n <= 4 and 0 <= m <= 4):
        raise ValueError("matrix_element_integral supports 0 <= n, m <= 4")
    if quad_points < 64:
        raise ValueError("quad_points must be >= 64")
    params = e if isinstance(e, SqueezedThermalParams) else params_from_ellipse(e)
    coarse = _sts_quadrature(n, m, params.nbar0, params.r, quad_points)
    fine = _sts_quadrature(n, m, params.nbar0, params.r, 2 * quad_points)
    if abs(fine - coarse) > QUADRATURE_TOL:
        raise QuadratureNotConverged(
            f"quadrature changed by {abs(fine - coarse):.2e} on doubling nodes"
        )
    if abs(fine.imag) > QUADRATURE_TOL:
        raise QuadratureNotConverged(f"imaginary residue {fine.imag:.2e}")
    return float(fine.real)
