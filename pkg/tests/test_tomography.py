import io
import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from gaussfid.core import (
    CovarianceMatrix,
    GainMatrix,
    GaussianChannel,
    Quadratures,
    random_physical_channel,
)
from gaussfid.exceptions import (
    DegenerateProbeSet,
    NegativeVarianceEstimate,
    NonPositiveCovariance,
    UnphysicalReconstruction,
)
from gaussfid.fidelity import qubit_fidelity
from gaussfid.scenarios import heat_bath_channel
from gaussfid.tomography import (
    ChannelTomography,
    ProbeRecord,
    estimate_gain_and_offset,
    estimate_noise_cov,
    read_probe_csv,
    reconstruct_channel,
    records_to_array,
    simulate_records,
    write_probe_csv,
)

PROBES = [0, 1, 1j]


def params(ch):
    g, m, n = ch.gain, ch.noise_mean, ch.noise_cov
    return np.array([g.a11, g.a12, g.a21, g.a22, m.x, m.p, n.sxx, n.spp, n.cxp])


class TestGainAndOffset:
    def test_identity(self, identity):
        gain, mean = estimate_gain_and_offset(simulate_records(identity, PROBES))
        np.testing.assert_allclose(gain.as_matrix(), np.eye(2), atol=1e-15)
        assert mean.is_zero()

    def test_displaced_diagonal(self):
        ch = GaussianChannel(GainMatrix.diagonal(0.9, 1.1), Quadratures(0.2, -0.1), CovarianceMatrix(0.3, 0.4, 0.0))
        gain, mean = estimate_gain_and_offset(simulate_records(ch, PROBES))
        np.testing.assert_allclose(gain.as_matrix(), np.diag([0.9, 1.1]), atol=1e-12)
        assert (mean.x, mean.p) == pytest.approx((0.2, -0.1), abs=1e-12)

    def test_collinear(self, identity):
        with pytest.raises(DegenerateProbeSet):
            estimate_gain_and_offset(simulate_records(identity, [0, 1, 2]))

    def test_missing_vacuum(self, identity):
        with pytest.raises(DegenerateProbeSet):
            estimate_gain_and_offset(simulate_records(identity, [1, 1j, 1 + 1j]))

    def test_overdetermined(self, rng):
        ch = random_physical_channel(rng)
        alphas = [0] + list(rng.normal(size=8) + 1j * rng.normal(size=8))
        gain, _ = estimate_gain_and_offset(simulate_records(ch, alphas))
        np.testing.assert_allclose(gain.as_matrix(), ch.gain.as_matrix(), atol=1e-12)


class TestNoiseCov:
    def test_identity(self, identity):
        noise = estimate_noise_cov(simulate_records(identity, PROBES), GainMatrix.identity())
        assert (noise.sxx, noise.spp, noise.cxp) == (0.0, 0.0, 0.0)

    def test_heat_bath(self):
        gt, nbar = 0.6, 1.5
        ch = heat_bath_channel(gt, nbar)
        rec = reconstruct_channel(simulate_records(ch, PROBES))
        expected = (nbar + 0.5) * (1 - math.exp(-gt))
        assert rec.noise_cov.sxx == pytest.approx(expected, abs=1e-12)
        assert rec.noise_cov.spp == pytest.approx(expected, abs=1e-12)

    def test_asymmetric_amplifier(self):
        eps, g0, s0 = 1.4, 0.9, 0.6
        gx, gp, sx, sp = g0 * eps, g0 / eps, s0 * eps**2, s0 / eps**2
        ch = GaussianChannel(
            GainMatrix.diagonal(gx, gp), Quadratures(), CovarianceMatrix(sx - gx * gx / 2, sp - gp * gp / 2, 0.0)
        )
        rec = reconstruct_channel(simulate_records(ch, PROBES))
        assert rec.noise_cov.cxp == pytest.approx(0.0, abs=1e-13)
        assert 2 * sx - gx * gx >= 0 and rec.noise_cov.sxx == pytest.approx(sx - gx * gx / 2, abs=1e-12)

    def test_negative_variance(self):
        rec = [ProbeRecord(a, Quadratures.from_amplitude(a), CovarianceMatrix(0.3, 0.8, 0.0)) for a in PROBES]
        with pytest.raises(NegativeVarianceEstimate):
            estimate_noise_cov(rec, GainMatrix.identity())


class TestReconstruct:
    def test_round_trip(self, rng):
        for _ in range(25):
            ch = random_physical_channel(rng)
            rec = reconstruct_channel(simulate_records(ch, PROBES))
            np.testing.assert_allclose(params(rec), params(ch), atol=1e-10)

    def test_displaced_composition(self, rng):
        ch = random_physical_channel(rng)
        shifted = GaussianChannel(ch.gain, Quadratures(0.4, -0.7), ch.noise_cov)
        rec = reconstruct_channel(simulate_records(shifted, PROBES))
        assert (rec.offset.x, rec.offset.p) == pytest.approx((0.4, -0.7), abs=1e-12)
        assert qubit_fidelity(rec) == pytest.approx(qubit_fidelity(ch), abs=1e-12)

    def test_sub_heisenberg(self):
        # identity gain with a squeezed output below vacuum is not a channel
        rec = [ProbeRecord(a, Quadratures.from_amplitude(a), CovarianceMatrix(0.5, 0.6, 0.2)) for a in PROBES]
        with pytest.raises(UnphysicalReconstruction) as info:
            reconstruct_channel(rec)
        assert not info.value.report.physical

    def test_noisy_within_three_sigma(self, rng):
        # sigma_meas = 1e-3 per moment; 10^4 simulated repetitions of the
        # experiment give the empirical spread of every estimated parameter
        ch = random_physical_channel(rng)
        alphas = [0, 1, 1j]
        truth = params(ch)
        errors = np.array(
            [params(reconstruct_channel(simulate_records(ch, alphas, 1e-3, rng))) for _ in range(10_000)]
        ) - truth
        spread = errors.std(axis=0, ddof=1)
        # unbiased: the mean error is within 3 standard errors of zero
        assert np.all(np.abs(errors.mean(axis=0)) <= 3 * spread / math.sqrt(len(errors)))
        # a fresh reconstruction lies inside the 3-sigma band of every parameter
        single = params(reconstruct_channel(simulate_records(ch, alphas, 1e-3, rng)))
        assert np.all(np.abs(single - truth) <= 3 * spread)

    def test_consistency_with_noise_level(self, rng):
        ch = random_physical_channel(rng)
        alphas = [0, 1, 1j, -1, -1j]
        rms = []
        for noise in (1e-2, 1e-3, 1e-4):
            errs = [params(reconstruct_channel(simulate_records(ch, alphas, noise, rng))) - params(ch) for _ in range(40)]
            rms.append(float(np.sqrt(np.mean(np.square(errs)))))
        assert rms[0] > rms[1] > rms[2]


class TestProbeRecord:
    def test_rejects_non_positive(self):
        with pytest.raises(NonPositiveCovariance):
            ProbeRecord(0, Quadratures(), CovarianceMatrix(0.5, 0.5, 0.6))


class TestCsv:
    def test_round_trip(self, rng):
        records = simulate_records(random_physical_channel(rng), [0, 1, 1j, 0.3 - 2j])
        text = write_probe_csv(records)
        assert text.splitlines()[0] == "alpha_re,alpha_im,mean_x,mean_p,var_x,var_p,cov_xp"
        back = read_probe_csv(io.StringIO(text))
        np.testing.assert_array_equal(records_to_array(back), records_to_array(records))

    def test_file(self, tmp_path, identity):
        path = tmp_path / "probes.csv"
        write_probe_csv(simulate_records(identity, PROBES), path)
        assert len(read_probe_csv(path)) == 3

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "a,b,c\n1,2,3\n",
            "alpha_re,alpha_im,mean_x,mean_p,var_x,var_p,cov_xp\n0,0,0,0,0.5,0.5\n",
            "alpha_re,alpha_im,mean_x,mean_p,var_x,var_p,cov_xp\n0,0,0,x,0.5,0.5,0\n",
            "alpha_re,alpha_im,mean_x,mean_p,var_x,var_p,cov_xp\n",
            "alpha_re,alpha_im,mean_x,mean_p,var_x,var_p,cov_xp\n0,0,0,nan,0.5,0.5,0\n",
        ],
    )
    def test_malformed(self, text):
        with pytest.raises(ValueError):
            read_probe_csv(io.StringIO(text))


class TestEstimator:
    def test_fit(self, rng):
        ch = random_physical_channel(rng)
        X = records_to_array(simulate_records(ch, PROBES))
        est = ChannelTomography().fit(X)
        np.testing.assert_allclose(params(est.channel_), params(ch), atol=1e-10)
        assert est.n_probes_ == 3
        assert est.report_.physical
        assert est.fidelity() == pytest.approx(qubit_fidelity(ch), abs=1e-9)
        assert est.score(X) == pytest.approx(0.0, abs=1e-12)

    def test_predict(self, rng):
        ch = GaussianChannel(GainMatrix(0.8, 0.1, -0.2, 1.1), Quadratures(0.1, 0.2), CovarianceMatrix(0.4, 0.3, 0.0))
        est = ChannelTomography().fit(records_to_array(simulate_records(ch, PROBES)))
        alphas = np.array([0.5, -1j, 2 + 1j])
        expected = np.array([ch.output_mean(a).as_array() for a in alphas])
        np.testing.assert_allclose(est.predict(alphas), expected, atol=1e-12)

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            ChannelTomography().fidelity()

    def test_params_and_clone(self):
        est = ChannelTomography(max_condition=1e4)
        assert est.get_params() == {"max_condition": 1e4}
        assert clone(est).max_condition == 1e4

    def test_condition_limit(self, identity):
        X = records_to_array(simulate_records(identity, [0, 1, 1 + 1e-6j]))
        with pytest.raises(DegenerateProbeSet):
            ChannelTomography(max_condition=1e4).fit(X)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            ChannelTomography().fit(np.zeros((3, 5)))
