import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.utils import extraction
from src.utils.errors import InfeasibleError, ModelMismatchError, ParameterDomainError, RankError
from src.utils.extraction import (
    GConvention,
    SplittingKind,
    SplittingSeries,
    average_series,
    average_x_xx,
    classification_labels,
    classify_dot,
    classify_population,
    crossing_field,
    evaluate_eq1,
    estimate_noise,
    extract_peaks,
    extrapolate_d0,
    fit_eq1,
    fit_zeeman,
    gfactors_from_zeeman,
    linear_trend,
    population_trends,
    series_from_spectra,
    solve_g_eq2,
    solve_g_equal_magnitude,
)
from src.utils.model_core import MU_B, DotParameters, Polarization, field_grid, fine_structure, k_eq2
from src.utils.spectra import DEFAULT_MARGIN, PolarizedSpectrum, add_noise, derive_seed, lorentzian, synthesize

DOT_C_POINTS = ([0.0, 2.7, 5.0], [-16.0, 0.0, 31.0])


def exact_series(params, kind, fields):
    attr = {SplittingKind.S: "s", SplittingKind.D_H: "d_h", SplittingKind.D_V: "d_v"}[kind]
    values = [getattr(fine_structure(params, b), attr) for b in fields]
    return SplittingSeries.from_arrays(kind, fields, values)


def two_line_spectrum(e0, offset=0.0, step=0.5):
    grid = np.arange(-200.0, 200.0 + step, step) + e0 + offset
    intensity = lorentzian(grid, e0 + offset - 11.0, 1.5, 1.0) + lorentzian(grid, e0 + offset + 11.0, 1.5, 0.6)
    return PolarizedSpectrum(Polarization.H, grid, intensity)


def x_window(params):
    return params.e0 - DEFAULT_MARGIN, params.e0 + DEFAULT_MARGIN


def spike_with_reciprocal_vertex(y_c, y_r, target):
    """Three samples whose 1/y parabola has its vertex at 1/target."""
    u_c, u_r = 1.0 / y_c, 1.0 / y_r
    m = 8.0 * (u_c - 1.0 / target)
    d = 0.5 * (-m + math.sqrt(m * m + 4.0 * m * (2.0 * u_r - 2.0 * u_c)))
    return 1.0 / (u_r - d), y_c, y_r


class TestPeaks:
    def test_two_lorentzians(self):
        e0 = 1_382_000.0
        peaks = extract_peaks(two_line_spectrum(e0), min_prominence=0.05)
        assert len(peaks) == 2
        assert peaks[0][0] == pytest.approx(e0 - 11.0, abs=0.1)
        assert peaks[1][0] == pytest.approx(e0 + 11.0, abs=0.1)
        assert peaks[0][1] == pytest.approx(1.0, abs=0.01)
        assert peaks[1][1] == pytest.approx(0.6, abs=0.01)

    def test_prominence_filters_weak_peaks(self):
        peaks = extract_peaks(two_line_spectrum(0.0), min_prominence=0.7)
        assert len(peaks) == 1

    def test_flat_spectrum_has_no_peaks(self):
        spectrum = PolarizedSpectrum(Polarization.V, np.arange(10.0), np.zeros(10))
        assert extract_peaks(spectrum) == []

    @pytest.mark.parametrize("prominence", [0.0, 1.0, -0.2])
    def test_invalid_prominence(self, prominence):
        with pytest.raises(ParameterDomainError):
            extract_peaks(two_line_spectrum(0.0), prominence)

    @settings(max_examples=50, deadline=None)
    @given(delta=st.floats(min_value=-50.0, max_value=50.0))
    def test_translation_equivariance(self, delta):
        base = extract_peaks(two_line_spectrum(1000.0))
        shifted = extract_peaks(two_line_spectrum(1000.0, offset=delta))
        assert len(base) == len(shifted)
        for (c0, h0), (c1, h1) in zip(base, shifted):
            assert c1 - c0 == pytest.approx(delta, abs=1e-6)
            assert h1 == pytest.approx(h0, rel=1e-9)

    def test_noise_estimate(self, dot_c):
        h, _ = synthesize(dot_c, 1.0)
        assert estimate_noise(h.intensity) < 1e-4
        noisy = add_noise(h, 0.02, 5)
        assert estimate_noise(noisy.intensity) == pytest.approx(0.02 * np.max(h.intensity), rel=0.1)

    def test_noise_bumps_are_not_peaks(self, dot_c):
        h, _ = synthesize(dot_c, 0.0, include_biexciton=False)
        for seed in range(5):
            peaks = extract_peaks(add_noise(h, 0.02, seed), min_prominence=0.01)
            assert len(peaks) == 1
            # H brighter level sits at (d0 + s0) / 2 above the midpoint
            assert peaks[0][0] == pytest.approx(dot_c.e0 + 99.5, abs=0.2)

    def test_sharp_spike_does_not_outrank_line(self):
        grid = np.arange(0.0, 401.0)
        line = lorentzian(grid, 200.3, 1.5, 0.7)
        y_l, y_c, y_r = spike_with_reciprocal_vertex(0.0304, 0.0015, 14.0)
        spiked = line.copy()
        spiked[49:52] = [y_l, y_c, y_r]
        h = PolarizedSpectrum(Polarization.H, grid, spiked)
        v = PolarizedSpectrum(Polarization.V, grid, lorentzian(grid, 190.0, 1.5, 0.7))

        peaks = extract_peaks(h, min_prominence=0.01)
        assert len(peaks) == 2
        assert max(height for _, height in peaks) == pytest.approx(0.7, abs=0.01)
        spike_center, spike_height = next(p for p in peaks if p[0] < 100)
        assert spike_center == pytest.approx(50.0, abs=0.5)
        assert spike_height <= 2.0 * y_c

        extracted = series_from_spectra([(1.0, h, v)])
        assert extracted.s.values[0] == pytest.approx(10.3, abs=0.05)
        assert extracted.d_h.values[0] == pytest.approx(200.3 - spike_center, abs=1e-6)
        assert len(extracted.d_v) == 0


class TestSeriesFromSpectra:
    def test_noiseless_sweep(self, dot_c):
        fields = field_grid(0.0, 5.0, 11)
        sweep = [(b, *synthesize(dot_c, b)) for b in fields]
        extracted = series_from_spectra(sweep, window=x_window(dot_c))
        s, d_h, d_v = extracted
        assert len(s) == 11
        for sample in s.samples:
            assert sample.value == pytest.approx(fine_structure(dot_c, sample.b_x).s, abs=0.02)
        # the darker H line passes 1% of the brighter one near 1 T
        assert 0.0 not in d_h.fields
        assert 5.0 in d_h.fields
        for sample in d_h.samples:
            assert sample.value == pytest.approx(fine_structure(dot_c, sample.b_x).d_h, abs=0.02)
        assert len(d_v) == 0
        assert extracted.omitted == ()

    def test_biexciton_window_gives_reversed_splitting(self, dot_a):
        fields = [0.0, 2.0, 4.0]
        sweep = [(b, *synthesize(dot_a, b)) for b in fields]
        xx_center = dot_a.e0 - dot_a.xx_binding
        s_x = series_from_spectra(sweep, window=x_window(dot_a)).s
        s_xx = series_from_spectra(sweep, window=(xx_center - DEFAULT_MARGIN, xx_center + DEFAULT_MARGIN)).s
        assert np.allclose(s_xx.values, -s_x.values, atol=0.02)
        averaged = average_series(s_x, s_xx)
        assert np.allclose(averaged.values, [fine_structure(dot_a, b).s for b in fields], atol=0.02)

    def test_missing_channel_is_omitted(self, dot_a):
        h, v = synthesize(dot_a, 1.0)
        dark_v = PolarizedSpectrum(Polarization.V, v.grid, np.zeros_like(v.intensity))
        extracted = series_from_spectra([(1.0, h, dark_v)], window=x_window(dot_a))
        assert len(extracted.s) == 0
        assert extracted.omitted[0].b_x == 1.0
        assert "V" in extracted.omitted[0].reason

    def test_precision_round_trip(self, dot_c):
        fields = field_grid(0.0, 5.0, 11)
        clean = [(b, *synthesize(dot_c, b)) for b in fields]
        reference = fit_eq1(series_from_spectra(clean, window=x_window(dot_c)).s)
        passes = 0
        for seed in range(20):
            noisy = [
                (b, add_noise(h, 0.02, derive_seed(seed, i, 0)), add_noise(v, 0.02, derive_seed(seed, i, 1)))
                for i, (b, h, v) in enumerate(clean)
            ]
            fit = fit_eq1(series_from_spectra(noisy, window=x_window(dot_c)).s)
            if abs(fit.s0_hat - dot_c.s0) <= 0.5 and abs(fit.k_hat - reference.k_hat) <= 0.1 * abs(reference.k_hat):
                passes += 1
        assert passes >= 18

    def test_noisy_sweep_pairs_only_real_darker_lines(self, dot_c):
        fields = field_grid(0.0, 5.0, 11)
        noisy = [
            (b, add_noise(h, 0.02, derive_seed(3, i, 0)), add_noise(v, 0.02, derive_seed(3, i, 1)))
            for i, (b, h, v) in enumerate((b, *synthesize(dot_c, b)) for b in fields)
        ]
        s, d_h, d_v = series_from_spectra(noisy, window=x_window(dot_c))
        assert len(s) == 11
        for sample in s.samples:
            assert sample.value == pytest.approx(fine_structure(dot_c, sample.b_x).s, abs=0.5)
        # g_V = 0 leaves the V channel with a single line
        assert len(d_v) == 0
        assert 0.0 not in d_h.fields
        # the darker H line clears the noise floor only at the high-field end
        assert len(d_h) >= 1
        assert min(d_h.fields) >= 2.5
        for sample in d_h.samples:
            assert sample.value == pytest.approx(fine_structure(dot_c, sample.b_x).d_h, abs=1.0)

    @given(s=st.floats(min_value=-500.0, max_value=500.0), offset=st.floats(min_value=-100.0, max_value=100.0))
    def test_average_cancels_common_offset(self, s, offset):
        assert average_x_xx(s + offset, -s + offset) == pytest.approx(s, abs=1e-9)


class TestEq1Fit:
    def test_dot_c_points(self):
        fit = fit_eq1(SplittingSeries.from_arrays(SplittingKind.S, *DOT_C_POINTS))
        assert fit.s0_hat == pytest.approx(-16.0, abs=1e-9)
        assert fit.k_hat == pytest.approx(2.3244, abs=1e-3)
        assert fit.k_prime_hat == pytest.approx(-0.017775, abs=1e-5)
        assert fit.r_percent == 100.0
        assert np.all(fit.residuals == 0.0)
        assert crossing_field(fit, 10.0) == pytest.approx(2.7, abs=1e-3)

    def test_recovers_exact_polynomial(self):
        b = np.linspace(0.0, 6.0, 13)
        s = 12.0 - 1.5 * b ** 2 + 0.02 * b ** 4
        fit = fit_eq1(SplittingSeries.from_arrays(SplittingKind.S, b, s))
        assert (fit.s0_hat, fit.k_hat, fit.k_prime_hat) == pytest.approx((12.0, -1.5, 0.02), abs=1e-8)
        assert fit.r_percent == pytest.approx(100.0)
        assert evaluate_eq1(fit, 2.0) == pytest.approx(12.0 - 6.0 + 0.32)
        assert fit.covariance.shape == (3, 3)

    def test_without_quartic(self):
        fit = fit_eq1(SplittingSeries.from_arrays(SplittingKind.S, [0.0, 2.0], [5.0, 13.0]), include_quartic=False)
        assert (fit.s0_hat, fit.k_hat, fit.k_prime_hat) == pytest.approx((5.0, 2.0, 0.0))

    def test_weighted_fit(self):
        b = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
        s = np.array([1.0, 3.1, 8.8, 19.2, 40.0])
        sigmas = [0.1, 0.1, 0.1, 0.1, 10.0]
        fit = fit_eq1(SplittingSeries.from_arrays(SplittingKind.S, b, s, sigmas), include_quartic=False)
        unweighted = fit_eq1(SplittingSeries.from_arrays(SplittingKind.S, b, s), include_quartic=False)
        # the last point barely counts with a large sigma
        assert abs(fit.evaluate(3.0) - 19.2) < abs(unweighted.evaluate(3.0) - 19.2)
        assert 0.0 <= fit.r_percent <= 100.0

    def test_single_row_is_rank_deficient(self):
        with pytest.raises(RankError) as excinfo:
            fit_eq1(SplittingSeries.from_arrays(SplittingKind.S, [1.0], [3.0]))
        assert excinfo.value.exit_code == 3

    def test_repeated_field_rejected(self):
        with pytest.raises(ParameterDomainError):
            SplittingSeries.from_arrays(SplittingKind.S, [1.0, 1.0, 2.0], [1.0, 2.0, 3.0])

    def test_negative_field_rejected(self):
        with pytest.raises(ParameterDomainError):
            SplittingSeries.from_arrays(SplittingKind.S, [-1.0, 1.0, 2.0], [1.0, 2.0, 3.0])


class TestZeemanFit:
    def test_noiseless_gaas_dot(self, dot_a):
        fields = list(field_grid(0.0, 5.0, 11))
        fit_h = fit_zeeman(exact_series(dot_a, SplittingKind.D_H, fields))
        fit_v = fit_zeeman(exact_series(dot_a, SplittingKind.D_V, fields))
        assert fit_h.d_x0_hat == pytest.approx(226.0, rel=1e-6)
        assert fit_h.g_hat == pytest.approx(0.79, rel=1e-6)
        assert fit_v.d_x0_hat == pytest.approx(204.0, rel=1e-6)
        assert fit_v.g_hat < 1e-4
        assert extrapolate_d0(fit_h, fit_v) == pytest.approx(215.0, rel=1e-6)
        assert fit_h.d_x0_hat - fit_v.d_x0_hat == pytest.approx(22.0, rel=1e-6)

    def test_g_magnitudes_from_both_channels(self, dot_b):
        fields = list(field_grid(0.0, 5.0, 11))
        fit_h = fit_zeeman(exact_series(dot_b, SplittingKind.D_H, fields))
        fit_v = fit_zeeman(exact_series(dot_b, SplittingKind.D_V, fields))
        assert (fit_h.g_hat, fit_v.g_hat) == pytest.approx((1.34, 1.08), rel=1e-6)
        assert gfactors_from_zeeman(fit_h, fit_v) == pytest.approx((1.21, 0.13), rel=1e-6)
        assert solve_g_equal_magnitude(fit_h.g_hat) == pytest.approx((0.67, 0.67), rel=1e-6)

    def test_needs_d_series(self):
        with pytest.raises(ParameterDomainError):
            fit_zeeman(SplittingSeries.from_arrays(SplittingKind.S, [0.0, 1.0], [1.0, 2.0]))

    def test_single_sample(self):
        with pytest.raises(RankError):
            fit_zeeman(SplittingSeries.from_arrays(SplittingKind.D_H, [1.0], [200.0]))

    def test_non_positive_intercept(self):
        series = SplittingSeries.from_arrays(SplittingKind.D_V, [1.0, 2.0], [10.0, math.sqrt(500.0)])
        with pytest.raises(ModelMismatchError):
            fit_zeeman(series)


class TestGFactorSolve:
    def test_algaas_magnitude_convention(self, dot_b):
        solution = solve_g_eq2(k_eq2(dot_b), dot_b.s0, dot_b.d0, 1.08, GConvention.MAGNITUDE)
        assert solution.picked == pytest.approx((1.21, 0.13), abs=1e-9)
        assert len(solution.branches) == 1

    def test_signed_convention_equal_g(self, dot_a):
        solution = solve_g_eq2(k_eq2(dot_a), dot_a.s0, dot_a.d0, 0.0, "signed")
        assert np.allclose(sorted(solution.branches), [(-0.395, -0.395), (0.395, 0.395)], rtol=0.0, atol=1e-9)
        assert solution.heuristic_pick is None
        assert solution.convention == GConvention.SIGNED

    def test_branches_reproduce_k(self, dot_b):
        k = k_eq2(dot_b)
        for convention in GConvention:
            solution = solve_g_eq2(k, dot_b.s0, dot_b.d0, 1.08, convention)
            for g_e, g_h in solution.branches:
                k_back = k_eq2(DotParameters(s0=dot_b.s0, d0=dot_b.d0, g_e=g_e, g_h=g_h))
                assert k_back == pytest.approx(k, rel=1e-9)

    def test_branch_missing_k_is_dropped(self, dot_a, monkeypatch, caplog):
        exact = extraction.k_eq2
        monkeypatch.setattr(extraction, "k_eq2", lambda p: exact(p) + (1.0 if p.g_e < 0 else 0.0))
        with caplog.at_level(logging.WARNING, logger=extraction.__name__):
            solution = solve_g_eq2(exact(dot_a), dot_a.s0, dot_a.d0, 0.0, GConvention.SIGNED)
        assert len(solution.branches) == 1
        assert np.allclose(solution.branches, [(0.395, 0.395)], rtol=0.0, atol=1e-9)
        assert "Dropping branch" in caplog.text

    def test_no_branch_reproducing_k_is_infeasible(self, dot_a, monkeypatch):
        exact = extraction.k_eq2
        monkeypatch.setattr(extraction, "k_eq2", lambda p: exact(p) + 1.0)
        with pytest.raises(InfeasibleError) as excinfo:
            solve_g_eq2(exact(dot_a), dot_a.s0, dot_a.d0, 0.0, GConvention.SIGNED)
        assert excinfo.value.discriminant > 0

    def test_infeasible(self, dot_a):
        with pytest.raises(InfeasibleError) as excinfo:
            solve_g_eq2(-1.0, dot_a.s0, dot_a.d0, 0.0, GConvention.SIGNED)
        assert excinfo.value.discriminant < 0
        assert excinfo.value.exit_code == 4

    def test_invalid_domain(self):
        with pytest.raises(ParameterDomainError):
            solve_g_eq2(1.0, 500.0, 200.0, 0.0)


class TestCrossing:
    def test_dot_c_closed_form(self, dot_c):
        expected = math.sqrt(239.0 ** 2 - 207.0 ** 2) / (0.8 * MU_B)
        assert crossing_field(dot_c, 5.0) == pytest.approx(expected, abs=1e-6)

    def test_no_crossing(self, dot_a, dot_b):
        assert crossing_field(dot_a, 10.0) is None
        assert crossing_field(dot_b, 10.0) is None

    def test_zero_splitting_at_zero_field(self):
        assert crossing_field(DotParameters(s0=0.0, d0=200.0, g_e=0.3, g_h=0.5), 5.0) == 0.0

    def test_invalid_limit(self, dot_c):
        with pytest.raises(ParameterDomainError):
            crossing_field(dot_c, 0.0)

    def test_classification(self, dot_a, dot_b, dot_c):
        assert classification_labels() == ["crosses_below_5T", "crosses_below_10T", "no_crossing_below_10T"]
        assert classify_dot(dot_c) == "crosses_below_5T"
        assert classify_dot(dot_c.replace(s0=-60.0)) == "crosses_below_10T"
        assert classify_dot(dot_a) == "no_crossing_below_10T"
        assert classify_dot(dot_b) == "no_crossing_below_10T"

    def test_population(self, dot_a, dot_b, dot_c):
        dots = [dot_a, dot_b, dot_c, dot_c.replace(s0=-60.0)]
        serial = classify_population(dots)
        threaded = classify_population(dots, max_workers=3)
        assert serial == threaded
        assert [r.index for r in serial] == [0, 1, 2, 3]
        assert serial[3].crossing_field == pytest.approx(math.sqrt(305.0 ** 2 - 185.0 ** 2) / (0.8 * MU_B), abs=1e-6)

    def test_population_scans_each_dot_once(self, dot_a, dot_b, dot_c, monkeypatch):
        dots = [dot_a, dot_b, dot_c, dot_c.replace(s0=-60.0)]
        expected = [(classify_dot(d), crossing_field(d, 10.0)) for d in dots]
        calls = []
        scan = extraction.crossing_field

        def counting(model, b_max, *args, **kwargs):
            calls.append(b_max)
            return scan(model, b_max, *args, **kwargs)

        monkeypatch.setattr(extraction, "crossing_field", counting)
        results = classify_population(dots)
        assert calls == [10.0] * len(dots)
        assert [(r.label, r.crossing_field) for r in results] == expected

    def test_empty_thresholds(self, dot_c):
        with pytest.raises(ParameterDomainError):
            classify_population([dot_c], thresholds=[])


class TestTrends:
    def test_exact_line(self):
        trend = linear_trend([(1.0, 3.0), (2.0, 5.0), (4.0, 9.0)])
        assert (trend.slope, trend.intercept, trend.r_percent) == pytest.approx((2.0, 1.0, 100.0))

    def test_constant(self):
        trend = linear_trend([(1.0, 3.0), (2.0, 3.0)])
        assert (trend.slope, trend.intercept, trend.r_percent) == (0.0, 3.0, 100.0)

    def test_single_x_value(self):
        with pytest.raises(RankError):
            linear_trend([(1.0, 3.0), (1.0, 4.0)])

    def test_population_trends(self, dot_a, dot_b):
        dots = [dot_a.replace(e_c=60.0), dot_b.replace(e_c=150.0)]
        trends = population_trends(dots)
        assert trends["d0_vs_e_c"].slope == pytest.approx((473.0 - 215.0) / 90.0)
        assert trends["d0_vs_s0"].slope == pytest.approx((473.0 - 215.0) / 262.0)
        assert population_trends([dot_a, dot_b])["d0_vs_e_c"] is None
