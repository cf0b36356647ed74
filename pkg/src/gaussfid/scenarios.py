"""Worked examples as plot-ready parameter sweeps.

* Symmetric gain and noise: fidelity over (1 - g, 2 sigma^2 - 1) with the
  2/3 benchmark contour.
* Oscillator coupled to a heat bath: fidelity decay in time and the time at
  which it crosses the benchmark.
* Diagonal asymmetric gain and noise: fidelity against the asymmetry
  parameter epsilon, including the noiseless parametric amplifier.

Heat-bath time conventions
--------------------------
``"langevin"``
    Solution of the damped oscillator coupled to a bath at rate gamma:
    ``g = exp(-gamma t / 2)`` and ``Var(F) = (N + 1/2)(1 - exp(-gamma t))``,
    so the output variance is ``1/2 + N (1 - exp(-gamma t))``.
``"fast-gain"``
    ``g = exp(-gamma t)`` with the same output variance.  This is the
    parameterisation behind the commonly quoted decay numbers: initial slope
    ``-(2 + 5N)/3`` and benchmark time ``-ln(sqrt 2 - 1) ~ 0.881`` at N = 0.
    In the Langevin convention the same benchmark is reached at
    ``gamma t ~ 1.763``, i.e. 88 % of the amplitude coherence time ``2/gamma``.

Sweeps default to ``"fast-gain"``; :func:`heat_bath_channel` defaults to
``"langevin"``.
"""

from dataclasses import dataclass, field
import csv
import io
import json
import math

import numpy as np
from skimage import measure

from ._validation import check_grid, check_nonnegative
from .core import CovarianceMatrix, GainMatrix, GaussianChannel, Quadratures
from .exceptions import BenchmarkUnreachable, UnphysicalParameters
from .fidelity import (
    fidelity_asymmetric_diagonal,
    fidelity_symmetric,
    noiseless_amplifier_fidelity,
)

__all__ = [
    "CLASSICAL_BENCHMARK",
    "SweepResult",
    "heat_bath_parameters",
    "heat_bath_channel",
    "heat_bath_asymptote",
    "heat_bath_curve",
    "time_to_benchmark",
    "benchmark_time_sweep",
    "symmetric_contour_grid",
    "iso_contours",
    "amplifier_sweep",
    "amplifier_benchmark_threshold",
    "default_grid",
]

CLASSICAL_BENCHMARK = 2.0 / 3.0
CONVENTIONS = ("fast-gain", "langevin")


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Values of one quantity on a rectilinear parameter grid.

    ``values.shape == tuple(len(g) for g in grids)``; the first axis varies
    slowest in the long-form CSV.
    """

    name: str
    axes: tuple
    grids: tuple
    values: np.ndarray
    value_name: str = "fq"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        axes = tuple(str(a) for a in self.axes)
        grids = tuple(np.asarray(g, dtype=float) for g in self.grids)
        values = np.asarray(self.values, dtype=float)
        if len(axes) != len(grids):
            raise ValueError("one grid per axis is required")
        if values.shape != tuple(g.size for g in grids):
            raise ValueError(
                f"values shape {values.shape} does not match grids "
                f"{tuple(g.size for g in grids)}"
            )
        if self.value_name == "fq" and (np.any(values < 0) or np.any(values > 1)):
            raise ValueError("fidelity values must lie in [0, 1]")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "grids", grids)
        object.__setattr__(self, "values", values)

    def long_form(self):
        """Rows ``(*params, value)`` in C order of the value array."""
        mesh = np.meshgrid(*self.grids, indexing="ij")
        cols = [m.ravel() for m in mesh] + [self.values.ravel()]
        return np.column_stack(cols)

    def to_csv(self, dest=None):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([*self.axes, self.value_name])
        for row in self.long_form():
            writer.writerow([repr(float(v)) for v in row])
        return _emit(buf.getvalue(), dest)

    def to_dict(self):
        return {
            "name": self.name,
            "axes": list(self.axes),
            "grids": {a: g.tolist() for a, g in zip(self.axes, self.grids)},
            "value_name": self.value_name,
            "values": self.values.tolist(),
            "metadata": self.metadata,
        }

    def to_json(self, dest=None):
        return _emit(json.dumps(self.to_dict(), indent=2) + "\n", dest)

    @classmethod
    def from_dict(cls, data):
        axes = data["axes"]
        return cls(
            data["name"],
            axes,
            [data["grids"][a] for a in axes],
            data["values"],
            data.get("value_name", "fq"),
            data.get("metadata", {}),
        )


def _emit(text, dest):
    if dest is None:
        return text
    with open(dest, "w", newline="") as fh:
        fh.write(text)
    return None


def default_grid(lo, hi, steps):
    return np.linspace(lo, hi, steps)


def _bisect(func, lo, hi, ftol=1e-10, maxiter=200):
    """Root of a function with a sign change on [lo, hi]."""
    flo = func(lo)
    fhi = func(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ValueError("root is not bracketed")
    mid = 0.5 * (lo + hi)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fmid = func(mid)
        if abs(fmid) < ftol or hi - lo < 1e-15 * max(1.0, abs(mid)):
            return mid
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi = mid
    return mid


# -- heat bath ----------------------------------------------------------


def _check_convention(convention):
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")


def heat_bath_parameters(gamma_t, nbar, convention="fast-gain"):
    """Gain ``g`` and isotropic output variance after time ``gamma_t``.

    Vectorised over ``gamma_t``; ``np.inf`` gives the stationary limit.
    """
    _check_convention(convention)
    nbar = check_nonnegative(nbar, "nbar")
    gt = np.asarray(gamma_t, dtype=float)
    if np.any(np.isnan(gt)) or np.any(gt < 0):
        raise ValueError("gamma_t must be >= 0")
    decay = np.exp(-gt)
    g = decay if convention == "fast-gain" else np.exp(-0.5 * gt)
    sigma_sq = 0.5 + nbar * (1.0 - decay)
    if g.ndim == 0:
        return float(g), float(sigma_sq)
    return g, sigma_sq


def heat_bath_channel(gamma_t, nbar, convention="langevin"):
    """Channel of an oscillator damped at rate gamma into a bath of occupation ``nbar``."""
    g, sigma_sq = heat_bath_parameters(gamma_t, nbar, convention)
    var_f = sigma_sq - 0.5 * g**2
    return GaussianChannel(
        GainMatrix.diagonal(g, g), Quadratures(), CovarianceMatrix(var_f, var_f, 0.0)
    )


def heat_bath_asymptote(nbar):
    """Long-time fidelity ``(N + 1/2) / (N + 1)^2``."""
    nbar = check_nonnegative(nbar, "nbar")
    return (nbar + 0.5) / (nbar + 1.0) ** 2


def heat_bath_curve(nbar, gamma_t_grid, convention="fast-gain"):
    """Fidelity decay ``Fq(gamma t)`` for bath occupation ``nbar``."""
    grid = check_grid(gamma_t_grid, "gamma_t_grid", sorted_ascending=True)
    if grid[0] < 0:
        raise ValueError("gamma_t_grid must be >= 0")
    g, sigma_sq = heat_bath_parameters(grid, nbar, convention)
    fq = fidelity_symmetric(g, sigma_sq)
    meta = {
        "scenario": "heat-bath",
        "nbar": float(nbar),
        "convention": convention,
        "asymptote": heat_bath_asymptote(nbar),
        "benchmark_time": time_to_benchmark(nbar, convention),
    }
    return SweepResult("heat-bath", ("gamma_t",), (grid,), fq, "fq", meta)


def time_to_benchmark(nbar, convention="fast-gain", level=CLASSICAL_BENCHMARK, ftol=1e-10):
    """``gamma T`` at which the heat-bath fidelity falls to ``level``.

    Raises
    ------
    BenchmarkUnreachable
        If the long-time fidelity is not below ``level``.
    """
    if heat_bath_asymptote(nbar) >= level:
        raise BenchmarkUnreachable(
            f"asymptotic fidelity {heat_bath_asymptote(nbar):.4f} never drops below {level}"
        )

    def excess(gt):
        return fidelity_symmetric(*heat_bath_parameters(gt, nbar, convention)) - level

    hi = 1.0
    while excess(hi) > 0:
        hi *= 2.0
    return _bisect(excess, 0.0, hi, ftol=ftol)


def benchmark_time_sweep(nbars, convention="fast-gain"):
    """Benchmark time as a function of bath occupation."""
    grid = check_grid(nbars, "nbars", sorted_ascending=True)
    times = np.array([time_to_benchmark(n, convention) for n in grid])
    meta = {"scenario": "benchmark-time", "convention": convention}
    return SweepResult("benchmark-time", ("nbar",), (grid,), times, "gamma_T", meta)


# -- symmetric gain and noise --------------------------------------------


def symmetric_contour_grid(one_minus_g, excess_var, level=CLASSICAL_BENCHMARK):
    """Fidelity over gain imperfection ``1 - g`` and excess variance ``2 sigma^2 - 1``.

    The metadata carries the ``level`` iso-contour as a list of polylines
    of ``(1 - g, 2 sigma^2 - 1)`` points.
    """
    x = check_grid(one_minus_g, "one_minus_g", sorted_ascending=True)
    y = check_grid(excess_var, "excess_var", sorted_ascending=True)
    g = 1.0 - x[:, None]
    sigma_sq = 0.5 * (1.0 + y[None, :])
    fq = fidelity_symmetric(g, sigma_sq)
    result = SweepResult("symmetric-grid", ("one_minus_g", "excess_var"), (x, y), fq)
    contours = iso_contours(result, level)
    result.metadata.update(
        {
            "scenario": "symmetric-grid",
            "level": level,
            "contours": [c.tolist() for c in contours],
        }
    )
    return result


def iso_contours(result, level):
    """Iso-lines of a 2-D sweep in parameter coordinates (marching squares)."""
    if len(result.grids) != 2:
        raise ValueError("iso_contours needs a 2-D sweep")
    gx, gy = result.grids
    if gx.size < 2 or gy.size < 2:
        return []
    out = []
    for path in measure.find_contours(result.values, level):
        px = np.interp(path[:, 0], np.arange(gx.size), gx)
        py = np.interp(path[:, 1], np.arange(gy.size), gy)
        out.append(np.column_stack([px, py]))
    return out


# -- asymmetric gain and noise -------------------------------------------


def _asymmetric_params(g0, sigma0_sq, eps):
    return g0 * eps, g0 / eps, sigma0_sq * eps**2, sigma0_sq / eps**2


def amplifier_sweep(g0, sigma0_sq, eps_grid, level=CLASSICAL_BENCHMARK):
    """Fidelity against asymmetry ``eps`` at fixed ``gx gp = g0^2``, ``sx sp = sigma0^4``.

    ``gx = g0 eps``, ``gp = g0 / eps``, ``sx^2 = sigma0^2 eps^2`` and
    ``sp^2 = sigma0^2 / eps^2``.  The metadata records the first ``eps > 1``
    at which the curve falls to ``level`` (None if it stays above it on the
    grid range).
    """
    eps = check_grid(eps_grid, "eps_grid", sorted_ascending=True, positive=True)
    fq = fidelity_asymmetric_diagonal(*_asymmetric_params(g0, sigma0_sq, eps))

    def excess(e):
        return fidelity_asymmetric_diagonal(*_asymmetric_params(g0, sigma0_sq, e)) - level

    crossing = None
    lo = max(1.0, float(eps[0]))
    hi = float(eps[-1])
    if hi > lo and excess(lo) > 0 > excess(hi):
        crossing = _bisect(excess, lo, hi)
    meta = {
        "scenario": "amplifier-sweep",
        "g0": float(g0),
        "sigma0_sq": float(sigma0_sq),
        "level": level,
        "benchmark_crossing": crossing,
    }
    return SweepResult("amplifier-sweep", ("epsilon",), (eps,), fq, "fq", meta)


def amplifier_benchmark_threshold(level=CLASSICAL_BENCHMARK):
    """Gain ``G = eps > 1`` at which the noiseless amplifier reaches ``level``."""

    def excess(eps):
        return noiseless_amplifier_fidelity(math.log(eps)) - level

    hi = 2.0
    while excess(hi) > 0:
        hi *= 2.0
    if excess(1.0) <= 0:
        raise UnphysicalParameters(f"noiseless amplifier never exceeds {level}")
    return _bisect(excess, 1.0, hi)
