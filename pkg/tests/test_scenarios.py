import json
import math

import numpy as np
import pytest
from scipy.optimize import newton

from gaussfid.core import check_physical
from gaussfid.exceptions import BenchmarkUnreachable
from gaussfid.fidelity import fidelity_asymmetric_diagonal, fidelity_symmetric, noiseless_amplifier_fidelity, qubit_fidelity
from gaussfid.fock import fidelity_bruteforce
from gaussfid.scenarios import (
    CLASSICAL_BENCHMARK,
    SweepResult,
    amplifier_benchmark_threshold,
    amplifier_sweep,
    benchmark_time_sweep,
    heat_bath_asymptote,
    heat_bath_channel,
    heat_bath_curve,
    heat_bath_parameters,
    iso_contours,
    symmetric_contour_grid,
    time_to_benchmark,
)

NBARS = [0.0, 0.3, 1.0, 3.0, 10.0]


def _symmetric_channel(g, s):
    from gaussfid.core import CovarianceMatrix, GainMatrix, GaussianChannel, Quadratures

    v = s - 0.5 * g * g
    return GaussianChannel(GainMatrix.diagonal(g, g), Quadratures(), CovarianceMatrix(v, v, 0.0))


class TestHeatBath:
    @pytest.mark.parametrize("convention", ["fast-gain", "langevin"])
    def test_start_is_identity(self, convention):
        assert heat_bath_parameters(0.0, 2.0, convention) == (1.0, 0.5)
        ch = heat_bath_channel(0.0, 2.0, convention)
        assert qubit_fidelity(ch) == pytest.approx(1.0, abs=1e-15)

    def test_full_decay(self):
        g, s = heat_bath_parameters(np.inf, 0.0)
        assert (g, s) == (0.0, 0.5)

    def test_variance(self):
        _, s = heat_bath_parameters(1.0, 1.0)
        assert s == pytest.approx(0.5 + (1 - math.exp(-1)))

    def test_langevin_gain(self):
        g, _ = heat_bath_parameters(0.8, 0.0, "langevin")
        assert g == pytest.approx(math.exp(-0.4))

    def test_bad_convention(self):
        with pytest.raises(ValueError):
            heat_bath_parameters(1.0, 0.0, "other")

    def test_asymptotes(self):
        assert heat_bath_asymptote(0.0) == 0.5
        late = heat_bath_curve(0.0, np.array([0.0, 60.0])).values[-1]
        assert late == pytest.approx(0.5, abs=1e-12)
        for n in (10.0, 100.0, 1000.0):
            assert abs(n * heat_bath_asymptote(n) - 1) < 1.5 / n

    @pytest.mark.parametrize("nbar", NBARS)
    @pytest.mark.parametrize("convention", ["fast-gain", "langevin"])
    def test_monotone_and_physical(self, nbar, convention):
        grid = np.linspace(0, 6, 400)
        curve = heat_bath_curve(nbar, grid, convention)
        assert np.all(np.diff(curve.values) <= 0)
        for gt in grid[::50]:
            assert check_physical(heat_bath_channel(gt, nbar, convention)).physical

    @pytest.mark.parametrize("nbar", [0.0, 1.0])
    def test_small_time_slope(self, nbar):
        gt = 1e-3
        fq = heat_bath_curve(nbar, np.array([0.0, gt])).values[-1]
        approx = 1 - (2 + 5 * nbar) * gt / 3
        assert abs(fq - approx) / approx <= 1e-5

    @pytest.mark.parametrize("nbar", NBARS)
    def test_initial_slope(self, nbar):
        # forward differences at h and h/2, Richardson-combined to cancel the
        # O(h) curvature term; the remaining error grows like ((1 + nbar) h)^2
        h = 1e-4
        f = heat_bath_curve(nbar, np.array([0.0, h / 2, h])).values
        slope = 2 * (f[1] - f[0]) / (h / 2) - (f[2] - f[0]) / h
        assert -slope == pytest.approx((2 + 5 * nbar) / 3, rel=1e-5)

    def test_bruteforce_subsample(self):
        for nbar in (0.0, 1.0):
            grid = np.linspace(0, 3, 5)
            curve = heat_bath_curve(nbar, grid)
            for gt, value in zip(grid, curve.values):
                g, s = heat_bath_parameters(gt, nbar)
                assert fidelity_bruteforce(_symmetric_channel(g, s)) == pytest.approx(value, abs=1e-6)


class TestBenchmarkTime:
    def test_zero_temperature(self):
        assert time_to_benchmark(0.0) == pytest.approx(0.8814, abs=1e-3)
        assert time_to_benchmark(0.0, "langevin") == pytest.approx(2 * time_to_benchmark(0.0), rel=1e-9)

    def test_hot_bath_faster(self):
        assert time_to_benchmark(10.0) < time_to_benchmark(0.0)

    def test_monotone(self):
        times = benchmark_time_sweep(NBARS).values
        assert np.all(np.diff(times) < 0)

    def test_newton_cross_check(self):
        def excess(gt):
            return fidelity_symmetric(*heat_bath_parameters(gt, 1.0)) - CLASSICAL_BENCHMARK

        root = newton(excess, 0.3, tol=1e-14)
        assert time_to_benchmark(1.0) == pytest.approx(root, abs=1e-8)

    def test_unreachable(self):
        with pytest.raises(BenchmarkUnreachable):
            time_to_benchmark(0.0, level=0.4)


class TestSymmetricGrid:
    def test_corner(self):
        res = symmetric_contour_grid(np.linspace(0, 1, 11), np.linspace(0, 1, 11))
        assert res.values[0, 0] == pytest.approx(1.0)
        assert res.values.shape == (11, 11)

    def test_value(self):
        res = symmetric_contour_grid(np.array([0.0, 0.1]), np.array([0.0, 0.05]))
        assert res.values[1, 1] == pytest.approx(0.9012, abs=1e-4)
        assert res.values[1, 1] == pytest.approx(fidelity_bruteforce(_symmetric_channel(0.9, 0.525)), abs=1e-6)

    def test_contour_on_level(self):
        res = symmetric_contour_grid(np.linspace(0, 1, 101), np.linspace(0, 1, 101))
        for line in res.metadata["contours"]:
            pts = np.array(line)
            vals = fidelity_symmetric(1 - pts[:, 0], 0.5 * (1 + pts[:, 1]))
            assert np.all(np.abs(vals - CLASSICAL_BENCHMARK) < 5e-3)

    def test_contour_root(self):
        from scipy.optimize import brentq

        def excess(y):
            return fidelity_symmetric(1.0, 0.5 * (1 + y)) - CLASSICAL_BENCHMARK

        root = brentq(excess, 0, 1, xtol=1e-14)
        assert fidelity_symmetric(1.0, 0.5 * (1 + root)) == pytest.approx(2 / 3, abs=1e-12)
        res = symmetric_contour_grid(np.linspace(0, 1, 201), np.linspace(0, 1, 201))
        starts = [c for c in iso_contours(res, CLASSICAL_BENCHMARK)]
        on_axis = [p for c in starts for p in c if abs(p[0]) < 1e-12]
        assert on_axis and abs(on_axis[0][1] - root) <= 1 / 200

    def test_unsorted_grid(self):
        with pytest.raises(ValueError):
            symmetric_contour_grid(np.array([0.5, 0.1]), np.array([0.0, 1.0]))


class TestAmplifier:
    def test_identity_point(self):
        res = amplifier_sweep(1.0, 0.5, np.array([1.0, 2.0]))
        assert res.values[0] == pytest.approx(1.0)

    def test_noiseless_curve(self):
        eps = np.linspace(1, 3, 50)
        res = amplifier_sweep(1.0, 0.5, eps)
        np.testing.assert_allclose(res.values, noiseless_amplifier_fidelity(np.log(eps)), atol=1e-12)

    def test_reciprocal_symmetry(self):
        eps = np.linspace(1.01, 3, 40)
        a = amplifier_sweep(0.9, 0.525, eps).values
        b = amplifier_sweep(0.9, 0.525, np.sort(1 / eps)).values[::-1]
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_threshold(self):
        eps = amplifier_benchmark_threshold()
        assert 1.95 <= eps <= 1.97
        assert noiseless_amplifier_fidelity(math.log(eps)) == pytest.approx(2 / 3, abs=1e-9)
        assert noiseless_amplifier_fidelity(math.log(1.5)) > 2 / 3 > noiseless_amplifier_fidelity(math.log(2.5))

    def test_metadata_crossing(self):
        res = amplifier_sweep(1.0, 0.5, np.linspace(1, 3, 400))
        assert res.metadata["benchmark_crossing"] == pytest.approx(amplifier_benchmark_threshold(), abs=1e-8)
        assert amplifier_sweep(1.0, 0.5, np.linspace(1, 1.5, 10)).metadata["benchmark_crossing"] is None

    def test_bruteforce_subsample(self):
        from gaussfid.core import CovarianceMatrix, GainMatrix, GaussianChannel, Quadratures

        # keeps both variances <= 3, where the dim-40 oracle is validated
        eps = np.linspace(0.7, 2.0, 5)
        res = amplifier_sweep(0.9, 0.6, eps)
        for e, value in zip(eps, res.values):
            gx, gp, sx, sp = 0.9 * e, 0.9 / e, 0.6 * e * e, 0.6 / (e * e)
            ch = GaussianChannel(
                GainMatrix.diagonal(gx, gp), Quadratures(), CovarianceMatrix(sx - gx * gx / 2, sp - gp * gp / 2, 0)
            )
            assert check_physical(ch).physical
            assert fidelity_bruteforce(ch) == pytest.approx(value, abs=1e-6)
            assert fidelity_asymmetric_diagonal(gx, gp, sx, sp) == pytest.approx(value, abs=1e-15)


class TestSweepResult:
    def test_json_round_trip(self):
        res = heat_bath_curve(0.3, np.linspace(0, 2, 7))
        back = SweepResult.from_dict(json.loads(res.to_json()))
        np.testing.assert_array_equal(back.values, res.values)
        assert back.metadata == res.metadata

    def test_csv_long_form(self):
        res = symmetric_contour_grid(np.linspace(0, 1, 3), np.linspace(0, 1, 4))
        lines = res.to_csv().splitlines()
        assert lines[0] == "one_minus_g,excess_var,fq"
        assert len(lines) == 1 + 12

    def test_deterministic(self):
        a = amplifier_sweep(1.0, 0.5, np.linspace(1, 3, 400)).to_json()
        b = amplifier_sweep(1.0, 0.5, np.linspace(1, 3, 400)).to_json()
        assert a == b

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            SweepResult("x", ("a",), (np.arange(3.0),), np.zeros(4))
