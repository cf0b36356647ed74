"""Channel reconstruction from coherent-probe measurements.

A vacuum probe yields the noise mean directly.  Two or more probes with
linearly independent input means fix the gain matrix by least squares, and
because every coherent input has covariance ``I/2`` the output second
moments give the noise covariance.

The functional API (:func:`reconstruct_channel` and friends) works on
:class:`ProbeRecord` sequences.  :class:`ChannelTomography` wraps it as a
scikit-learn estimator operating on an ``(n_probes, 7)`` array whose columns
follow the probe CSV layout ``PROBE_COLUMNS``.
"""

import csv
from dataclasses import dataclass
import io
import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_complex
from .core import (
    CovarianceMatrix,
    GainMatrix,
    GaussianChannel,
    Quadratures,
    check_physical,
    subtract_noise_mean,
)
from .exceptions import (
    DegenerateProbeSet,
    NegativeVarianceEstimate,
    NonPositiveCovariance,
    UnphysicalReconstruction,
)
from .fidelity import qubit_fidelity

__all__ = [
    "PROBE_COLUMNS",
    "ProbeRecord",
    "estimate_gain_and_offset",
    "estimate_noise_cov",
    "reconstruct_channel",
    "simulate_records",
    "records_to_array",
    "records_from_array",
    "read_probe_csv",
    "write_probe_csv",
    "ChannelTomography",
]

PROBE_COLUMNS = ("alpha_re", "alpha_im", "mean_x", "mean_p", "var_x", "var_p", "cov_xp")
MAX_CONDITION = 1e8
VARIANCE_TOL = 1e-9


@dataclass(frozen=True)
class ProbeRecord:
    """Coherent probe amplitude with the measured output moments."""

    alpha: complex
    out_mean: Quadratures
    out_cov: CovarianceMatrix

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_complex(self.alpha, "alpha"))
        if not self.out_cov.is_positive_definite():
            raise NonPositiveCovariance("probe output covariance must be positive-definite")

    @property
    def input_mean(self):
        return Quadratures.from_amplitude(self.alpha).as_array()


def estimate_gain_and_offset(records, max_condition=MAX_CONDITION):
    """Least-squares gain matrix and noise mean from probe output means.

    Returns
    -------
    (GainMatrix, Quadratures)

    Raises
    ------
    DegenerateProbeSet
        If no vacuum probe is present or the non-vacuum input means do not
        span phase space (condition number above ``max_condition``).
    """
    records = list(records)
    vacuum = [r for r in records if r.alpha == 0]
    probes = [r for r in records if r.alpha != 0]
    if not vacuum:
        raise DegenerateProbeSet("a vacuum probe (alpha = 0) is required")
    if len(probes) < 2:
        raise DegenerateProbeSet("at least two non-vacuum probes are required")
    offset = np.mean([r.out_mean.as_array() for r in vacuum], axis=0)
    design = np.array([r.input_mean for r in probes])
    cond = np.linalg.cond(design)
    if not math.isfinite(cond) or cond > max_condition:
        raise DegenerateProbeSet(
            f"probe input means are (nearly) collinear: condition number {cond:.3g}"
        )
    target = np.array([r.out_mean.as_array() for r in probes]) - offset
    # design @ A^T = target
    a_t, *_ = np.linalg.lstsq(design, target, rcond=None)
    return GainMatrix.from_matrix(a_t.T), Quadratures.from_array(offset)


def estimate_noise_cov(records, gain):
    """Noise covariance implied by the output second moments, averaged over probes.

    Raises
    ------
    NegativeVarianceEstimate
        If an estimated noise variance is below -1e-9.
    """
    a = gain.as_matrix()
    coherent = 0.5 * a @ a.T
    estimates = np.array([r.out_cov.as_matrix() - coherent for r in records])
    if estimates.size == 0:
        raise ValueError("no probe records given")
    noise = CovarianceMatrix.from_matrix(estimates.mean(axis=0))
    for name, value in (("Var(F_x)", noise.sxx), ("Var(F_p)", noise.spp)):
        if value < -VARIANCE_TOL:
            raise NegativeVarianceEstimate(f"{name} estimated as {value:.3e} < 0")
    return noise


def reconstruct_channel(records, max_condition=MAX_CONDITION):
    """Estimate the full channel, check it, and strip the noise mean.

    The returned channel has ``noise_mean = 0``; the removed displacement
    is kept in ``offset``.

    Raises
    ------
    UnphysicalReconstruction
        If the estimate fails :func:`gaussfid.core.check_physical`.  The
        report is attached as ``exc.report``.
    """
    records = list(records)
    gain, mean = estimate_gain_and_offset(records, max_condition)
    noise = estimate_noise_cov(records, gain)
    ch = GaussianChannel(gain, mean, noise)
    report = check_physical(ch)
    if not report.physical:
        raise UnphysicalReconstruction(
            "reconstructed channel violates the physicality constraints", report
        )
    return subtract_noise_mean(ch)


def simulate_records(ch, alphas, noise_std=0.0, rng=None):
    """Synthetic probe records for ``ch``, optionally with Gaussian moment noise.

    Each of the five measured moments of every record receives independent
    ``N(0, noise_std^2)`` errors.
    """
    if noise_std and rng is None:
        raise ValueError("rng is required when noise_std > 0")
    out_cov = ch.output_covariance()
    records = []
    for alpha in alphas:
        mean = ch.output_mean(alpha).as_array()
        cov = np.array([out_cov.sxx, out_cov.spp, out_cov.cxp])
        if noise_std:
            mean = mean + rng.normal(0.0, noise_std, size=2)
            cov = cov + rng.normal(0.0, noise_std, size=3)
        records.append(
            ProbeRecord(complex(alpha), Quadratures.from_array(mean), CovarianceMatrix(*cov))
        )
    return records


def records_to_array(records):
    rows = [
        [
            r.alpha.real,
            r.alpha.imag,
            r.out_mean.x,
            r.out_mean.p,
            r.out_cov.sxx,
            r.out_cov.spp,
            r.out_cov.cxp,
        ]
        for r in records
    ]
    return np.array(rows, dtype=float).reshape(-1, len(PROBE_COLUMNS))


def records_from_array(X):
    """Validate a probe array and convert its rows to :class:`ProbeRecord`."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != len(PROBE_COLUMNS):
        raise ValueError(
            f"probe array must have shape (n, {len(PROBE_COLUMNS)}), got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("probe array contains non-finite values")
    return [
        ProbeRecord(
            complex(row[0], row[1]),
            Quadratures(row[2], row[3]),
            CovarianceMatrix(row[4], row[5], row[6]),
        )
        for row in arr
    ]


def read_probe_csv(source):
    """Parse probe records from a CSV path or text stream.

    The header must be exactly ``PROBE_COLUMNS``; any other layout raises
    ValueError.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="") as fh:
            return read_probe_csv(fh)
    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ValueError("probe CSV is empty") from None
    if tuple(header) != PROBE_COLUMNS:
        raise ValueError(f"probe CSV header must be {','.join(PROBE_COLUMNS)}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(PROBE_COLUMNS):
            raise ValueError(f"line {lineno}: expected {len(PROBE_COLUMNS)} fields")
        try:
            rows.append([float(cell) for cell in row])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric field") from None
    if not rows:
        raise ValueError("probe CSV contains no records")
    return records_from_array(rows)


def write_probe_csv(records, dest=None):
    """Write probe records as CSV; returns the text when ``dest`` is None."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PROBE_COLUMNS)
    for row in records_to_array(records):
        writer.writerow([repr(float(v)) for v in row])
    text = buf.getvalue()
    if dest is None:
        return text
    with open(dest, "w", newline="") as fh:
        fh.write(text)
    return None


class ChannelTomography(BaseEstimator):
    """Estimate a Gaussian channel from coherent-probe moments.

    Parameters
    ----------
    max_condition : float, default=1e8
        Largest acceptable condition number of the probe design matrix.

    Attributes
    ----------
    gain_ : GainMatrix
    noise_mean_ : Quadratures
        Noise mean before subtraction (equals ``channel_.offset``).
    noise_cov_ : CovarianceMatrix
    channel_ : GaussianChannel
        Zero-mean reconstructed channel.
    report_ : PhysicalityReport
    n_probes_ : int

    Examples
    --------
    >>> from gaussfid.core import GaussianChannel
    >>> from gaussfid.tomography import simulate_records, records_to_array
    >>> X = records_to_array(simulate_records(GaussianChannel.identity(), [0, 1, 1j]))
    >>> est = ChannelTomography().fit(X)
    >>> round(est.fidelity(), 12)
    1.0
    """

    def __init__(self, max_condition=MAX_CONDITION):
        self.max_condition = max_condition

    def fit(self, X, y=None):
        records = self._as_records(X)
        gain, mean = estimate_gain_and_offset(records, self.max_condition)
        noise = estimate_noise_cov(records, gain)
        raw = GaussianChannel(gain, mean, noise)
        report = check_physical(raw)
        if not report.physical:
            raise UnphysicalReconstruction(
                "reconstructed channel violates the physicality constraints", report
            )
        self.gain_ = gain
        self.noise_mean_ = mean
        self.noise_cov_ = noise
        self.report_ = report
        self.channel_ = subtract_noise_mean(raw)
        self.n_probes_ = len(records)
        return self

    def predict(self, alphas):
        """Predicted output means (including the noise mean) for coherent inputs."""
        check_is_fitted(self, "channel_")
        alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
        y_in = math.sqrt(2) * np.stack([alphas.real, alphas.imag], axis=1)
        return y_in @ self.gain_.as_matrix().T + self.noise_mean_.as_array()

    def score(self, X, y=None):
        """Negative RMS residual of the measured moments under the fitted model."""
        check_is_fitted(self, "channel_")
        arr = records_to_array(self._as_records(X))
        alphas = arr[:, 0] + 1j * arr[:, 1]
        mean_res = arr[:, 2:4] - self.predict(alphas)
        cov = self.channel_.output_covariance()
        cov_res = arr[:, 4:7] - np.array([cov.sxx, cov.spp, cov.cxp])
        return -float(np.sqrt(np.mean(np.concatenate([mean_res, cov_res], axis=1) ** 2)))

    def fidelity(self, optimize_phase=False):
        """Average qubit fidelity of the reconstructed channel."""
        check_is_fitted(self, "channel_")
        return qubit_fidelity(self.channel_, optimize_phase=optimize_phase)

    @staticmethod
    def _as_records(X):
        if isinstance(X, (list, tuple)) and X and isinstance(X[0], ProbeRecord):
            return list(X)
        return records_from_array(X)
