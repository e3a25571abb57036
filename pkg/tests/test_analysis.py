import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import savgol_filter

from nvmag import analysis
from nvmag.errors import FitError, ValidationError
from nvmag.spinmodel import Spectrum
from nvmag.trace import TimeTrace

from oracles import allan_nonoverlapping_by_hand, lorentzian, savgol_bruteforce


def white(n=200000, fs=2000.0, sigma=1.0, seed=0):
    return TimeTrace(np.random.default_rng(seed).standard_normal(n) * sigma, fs, "tesla", seed)


def test_psd_white_level():
    tr = white(sigma=2.0)
    spec = analysis.psd(tr, 2048)
    # one-sided density of unit-variance white noise is sqrt(2/fs)
    assert spec.median(10, 900) == pytest.approx(2.0 * math.sqrt(2 / 2000.0), rel=0.03)


def test_psd_parseval():
    tr = white(n=2**16)
    spec = analysis.psd(tr, 4096)
    var = np.sum(spec.asd**2) * (spec.freqs[1] - spec.freqs[0])
    assert var == pytest.approx(np.var(tr.samples), rel=0.05)


def test_psd_sine_peak():
    fs = 1000.0
    t = np.arange(2**14) / fs
    tr = TimeTrace(np.sin(2 * np.pi * 125.0 * t), fs)
    spec = analysis.psd(tr, 4096)
    assert spec.freqs[np.argmax(spec.asd)] == pytest.approx(125.0, abs=0.25)


def test_psd_bad_segment():
    with pytest.raises(ValidationError):
        analysis.psd(white(n=100), 4)
    with pytest.raises(ValidationError):
        analysis.psd(white(n=100), 64, overlap_fraction=0.95)


def test_average_psd():
    a = analysis.psd(white(seed=1), 1024)
    b = analysis.psd(white(seed=2), 1024)
    avg = analysis.average_psd([a, b])
    np.testing.assert_allclose(avg.asd**2, 0.5 * (a.asd**2 + b.asd**2))
    with pytest.raises(ValidationError):
        analysis.average_psd([a, analysis.psd(white(seed=3), 512)])


@pytest.mark.parametrize("window,order", [(5, 2), (7, 2), (11, 3), (9, 4), (3, 0)])
def test_savgol_kernel_against_bruteforce(window, order):
    np.testing.assert_allclose(analysis.savgol_kernel(window, order), savgol_bruteforce(window, order), atol=1e-12)


def test_savgol_matches_scipy(rng):
    x = rng.standard_normal(300).cumsum()
    np.testing.assert_allclose(analysis.savitzky_golay(x, 11, 3), savgol_filter(x, 11, 3, mode="interp"), atol=1e-10)


def test_savgol_preserves_polynomials():
    x = np.arange(40.0)
    y = 0.3 * x**3 - x + 2
    np.testing.assert_allclose(analysis.savitzky_golay(y, 7, 3), y, rtol=1e-10)


@pytest.mark.parametrize("w,o", [(4, 2), (5, 5), (0, 0), (5, -1)])
def test_savgol_rejects(w, o):
    with pytest.raises(ValidationError):
        analysis.savgol_kernel(w, o)


def test_allan_nonoverlapping_matches_hand():
    tr = white(n=6000)
    for m in (2, 10, 200):
        curve = analysis.allan_deviation(tr, [m / tr.sample_rate], "non-overlapping")
        assert curve.sigmas[0] == pytest.approx(allan_nonoverlapping_by_hand(tr.samples, m), rel=1e-12)


def test_allan_white_slope():
    tr = white()
    curve = analysis.allan_deviation(tr)
    slope, _ = analysis.loglog_slope(curve.taus, curve.sigmas, (0.002, 1.0))
    assert slope == pytest.approx(-0.5, abs=0.03)
    # sigma(tau) = d / sqrt(2 tau) for one-sided density d
    d = math.sqrt(2 / tr.sample_rate)
    k = np.argmin(np.abs(curve.taus - 0.1))
    assert curve.sigmas[k] == pytest.approx(d / math.sqrt(2 * curve.taus[k]), rel=0.05)


def test_allan_estimators_agree_on_white():
    tr = white()
    taus = [0.01, 0.1]
    a = analysis.allan_deviation(tr, taus).sigmas
    b = analysis.allan_deviation(tr, taus, "non-overlapping").sigmas
    np.testing.assert_allclose(a, b, rtol=0.1)


def test_allan_tau_validation():
    tr = white(n=1000)
    with pytest.raises(ValidationError):
        analysis.allan_deviation(tr, [0.0012])
    with pytest.raises(ValidationError):
        analysis.allan_deviation(tr, [0.0005])
    with pytest.raises(ValidationError):
        analysis.allan_deviation(tr, [0.4])
    with pytest.raises(ValidationError):
        analysis.allan_deviation(tr, [0.01, 0.005])
    with pytest.raises(ValidationError):
        analysis.allan_deviation(tr, estimator="modified")


def test_default_taus():
    tr = white(n=30000)
    taus = analysis.default_taus(tr)
    assert taus[0] == pytest.approx(1e-3)
    assert taus[-1] <= 30000 / 3 / 2000.0
    assert np.all(np.diff(taus) > 0)


def test_extract_sensitivity():
    assert analysis.extract_sensitivity(6e-9, 0.2) == pytest.approx(2.683e-9, rel=1e-3)
    with pytest.raises(ValidationError):
        analysis.extract_sensitivity(1.0, 0.0)


def test_loglog_slope():
    x = np.geomspace(1, 100, 10)
    assert analysis.loglog_slope(x, 3 * x**-0.5)[0] == pytest.approx(-0.5)
    with pytest.raises(ValidationError):
        analysis.loglog_slope(x, -x)


def test_lorentzian_fit_recovers_triplet():
    x = np.linspace(-5, 5, 401)
    truth = [(-2.16, 0.5, 1.0), (0.0, 0.5, 1.2), (2.16, 0.5, 0.9)]
    y = 0.1 + sum(lorentzian(x, *p) for p in truth)
    fit = analysis.fit_lorentzian_sum(Spectrum(x, y, "contrast"), 3)
    np.testing.assert_allclose(fit.centers, [-2.16, 0.0, 2.16], atol=1e-8)
    np.testing.assert_allclose(fit.widths, 0.5, atol=1e-8)
    np.testing.assert_allclose(fit.amplitudes, [1.0, 1.2, 0.9], atol=1e-8)
    assert fit.baseline == pytest.approx(0.1, abs=1e-8)
    np.testing.assert_allclose(fit.predict(x), y, atol=1e-9)


def test_lorentzian_fit_noisy_is_deterministic(rng):
    x = np.linspace(-3, 3, 201)
    y = lorentzian(x, 0.2, 0.4, -1.0) + 0.01 * rng.standard_normal(x.size)
    s = Spectrum(x, y, "contrast")
    a = analysis.fit_lorentzian_sum(s, 1)
    b = analysis.fit_lorentzian_sum(s, 1)
    assert a.centers[0] == b.centers[0]
    assert a.centers[0] == pytest.approx(0.2, abs=0.02)


def test_lorentzian_fit_errors():
    x = np.linspace(0, 1, 5)
    with pytest.raises(ValidationError):
        analysis.fit_lorentzian_sum(Spectrum(x, x, "contrast"), 2)
    with pytest.raises(ValidationError):
        analysis.fit_lorentzian_sum(Spectrum(x, x, "contrast"), 1, [(0.5, 0.1)])
    xs = np.linspace(-3, 3, 101)
    with pytest.raises(FitError):
        analysis.fit_lorentzian_sum(Spectrum(xs, lorentzian(xs, 0, 0.3, 1), "contrast"), 1, [(2.5, 0.01, -5)],
                                    max_nfev=3)


def test_beat_frequency():
    fs = 2000.0
    t = np.arange(int(20 * fs)) / fs
    x = np.sin(2 * np.pi * 50 * t) + 0.8 * np.sin(2 * np.pi * 57.5 * t)
    assert analysis.beat_frequency(TimeTrace(x, fs)) == pytest.approx(7.5, abs=0.05)


def test_noise_summary_keys():
    s = analysis.noise_summary(white(n=50000))
    assert s["extracted_sensitivity"] == pytest.approx(s["allan_min_sigma"] * math.sqrt(s["allan_min_tau_s"]))


@settings(max_examples=25, deadline=None)
@given(window=st.sampled_from([3, 5, 7, 9, 11, 15]), order=st.integers(0, 4), c=st.floats(-10, 10))
def test_savgol_kernel_sums_to_one_and_keeps_constants(window, order, c):
    if order >= window:
        return
    k = analysis.savgol_kernel(window, order)
    assert abs(k.sum() - 1.0) < 1e-12
    np.testing.assert_allclose(analysis.savitzky_golay(np.full(30, c), window, order), c, atol=1e-10)


def test_psd_tone_power():
    fs = 1000.0
    t = np.arange(2**15) / fs
    tr = TimeTrace(0.7 * np.sin(2 * np.pi * 125.0 * t), fs)
    spec = analysis.psd(tr, 4096)
    f, a = spec.band(120, 130)
    power = np.sum(a**2) * (spec.freqs[1] - spec.freqs[0])
    assert power == pytest.approx(0.7**2 / 2, rel=0.03)


def test_five_trace_average_reduces_scatter():
    single = analysis.psd(white(n=20000, seed=0), 2048)
    avg = analysis.average_psd([analysis.psd(white(n=20000, seed=s), 2048) for s in range(5)])
    _, a1 = single.band(10, 900)
    _, a5 = avg.band(10, 900)
    assert np.std(a5 / np.median(a5)) < 0.6 * np.std(a1 / np.median(a1))


def test_allan_constant_is_zero():
    curve = analysis.allan_deviation(TimeTrace(np.full(300, 4.2), 100.0))
    assert np.all(curve.sigmas == 0.0)


def test_allan_small_instance():
    x = np.array([1.0, 3.0, 2.0, 5.0, 4.0, 4.0, 7.0, 1.0])
    tr = TimeTrace(x, 1.0)
    got = analysis.allan_deviation(tr, [2.0], "non-overlapping").sigmas[0]
    # bins (2, 3.5, 4, 4): diffs 1.5, 0.5, 0
    assert got == pytest.approx(math.sqrt(0.5 * (1.5**2 + 0.5**2 + 0.0) / 3), abs=1e-15)
    assert got == pytest.approx(allan_nonoverlapping_by_hand(x, 2), abs=1e-15)


def test_extract_sensitivity_reference_values():
    assert analysis.extract_sensitivity(4e-9, 0.4) == pytest.approx(2.53e-9, abs=0.005e-9)
    assert analysis.extract_sensitivity(3.3, 1.0) == 3.3


def test_loglog_exact_slopes():
    x = np.geomspace(0.1, 1e3, 30)
    assert abs(analysis.loglog_slope(x, 2.0 / x)[0] + 1) < 1e-10
    assert analysis.loglog_slope(x, 2.0 / np.sqrt(x))[0] == pytest.approx(-0.5, abs=1e-12)


def test_filtered_white_rolloff():
    from nvmag.trace import FieldScenario, SensorOperatingPoint, synthesize_trace

    tr = synthesize_trace(FieldScenario(white_noise_density=1e-10), SensorOperatingPoint(100.0, seed=1), 100.0)
    spec = analysis.psd(tr, 2048)
    assert analysis.loglog_slope(spec.freqs, spec.asd, (318, 1000))[0] == pytest.approx(-1.0, abs=0.1)


def test_zero_amplitude_line_fits_baseline():
    x = np.linspace(-3, 3, 101)
    fit = analysis.fit_lorentzian_sum(Spectrum(x, np.full(x.size, 0.2), "contrast"), 1, [(0.0, 0.5, 0.0)])
    assert fit.baseline == pytest.approx(0.2, abs=1e-12)
    assert fit.amplitudes[0] == pytest.approx(0.0, abs=1e-12)


def test_hyperfine_spacing_from_cw_spectrum(params):
    from nvmag.spinmodel import DriveConfig, cw_spectrum

    grid = np.linspace(-5, 5, 1001)
    spec = cw_spectrum(params, DriveConfig(6.0, 0.5), grid, 1.0, units="contrast")
    fit = analysis.fit_lorentzian_sum(spec, 3)
    np.testing.assert_allclose(np.diff(fit.centers), 2.16, atol=1e-6)
