import math
import warnings

import numpy as np
import pytest
from scipy.signal import freqz

from nvmag import trace
from nvmag.errors import ValidationError
from nvmag.trace import FieldScenario, RangeWarning, SensorOperatingPoint, TimeTrace

OP = SensorOperatingPoint(slope=100.0, seed=3)


def test_lowpass_is_first_order_like():
    f = np.array([1.0, 159.0, 318.0, 500.0])
    h = trace.lowpass_response(f, 159.0, 2000.0)
    target = 1 / np.sqrt(1 + (f / 159.0) ** 2)
    np.testing.assert_allclose(h, target, rtol=0.02)
    assert trace.lowpass_response([0.0], 159.0, 2000.0)[0] == pytest.approx(1.0)


def test_lowpass_response_matches_freqz():
    b, a = trace.lowpass_coefficients(159.0, 2000.0)
    f = np.linspace(1, 999, 50)
    _, h = freqz(b, a, worN=f, fs=2000.0)
    np.testing.assert_allclose(trace.lowpass_response(f, 159.0, 2000.0), np.abs(h), rtol=1e-12)


def test_lowpass_rejects_corner_above_nyquist():
    with pytest.raises(ValidationError):
        trace.lowpass_coefficients(1200.0, 2000.0)


def test_lowpass_keeps_dc():
    tr = TimeTrace(np.full(100, 2.5), 2000.0)
    np.testing.assert_allclose(trace.lowpass_first_order(tr, 159.0).samples, 2.5)


def test_synthesis_is_seeded():
    sc = FieldScenario(white_noise_density=1e-10)
    a = trace.synthesize_trace(sc, OP, 1.0)
    b = trace.synthesize_trace(sc, OP, 1.0)
    c = trace.synthesize_trace(sc, SensorOperatingPoint(slope=100.0, seed=4), 1.0)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)
    assert a.samples.size == 2000 and a.seed == 3


def test_tone_amplitude_roundtrip():
    sc = FieldScenario(tones=((37.0, 1e-9, 0.0),))
    tr = trace.synthesize_trace(sc, OP, 2.0, lowpass=False)
    field = trace.volts_to_tesla(tr, OP.slope, OP.gamma_e)
    assert np.max(np.abs(field.samples)) == pytest.approx(1e-9, rel=1e-3)
    back = trace.tesla_to_volts(field, OP.slope, OP.gamma_e)
    np.testing.assert_allclose(back.samples, tr.samples)


def test_hum_harmonics():
    sc = FieldScenario(hum_amplitudes=(1e-9, 3e-10))
    t = np.arange(2000) / 2000.0
    b = trace.field_signal(sc, t, np.random.default_rng(0), 2000.0)
    spec = np.abs(np.fft.rfft(b)) * 2 / b.size
    assert spec[50] == pytest.approx(1e-9, rel=1e-9)
    assert spec[150] == pytest.approx(3e-10, rel=1e-9)
    assert spec[100] < 1e-20


def test_white_noise_level():
    sc = FieldScenario(white_noise_density=1e-10)
    t = np.arange(400000) / 2000.0
    b = trace.field_signal(sc, t, np.random.default_rng(1), 2000.0)
    # one-sided density d over fs/2 gives variance d**2 fs / 2
    assert np.std(b) == pytest.approx(1e-10 * math.sqrt(1000.0), rel=0.01)


def test_range_warning():
    sc = FieldScenario(tones=((10.0, 1e-4, 0.0),))
    op = SensorOperatingPoint(slope=1.0, linewidth=0.1)
    with pytest.warns(RangeWarning):
        trace.synthesize_trace(sc, op, 0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        trace.synthesize_trace(sc.scaled(1e-3), op, 0.1)


def test_scaled_scenario():
    sc = FieldScenario(((5.0, 2.0, 0.1),), 50.0, (1.0,), 0.5)
    s2 = sc.scaled(3.0)
    assert s2.tones == ((5.0, 6.0, 0.1),) and s2.hum_amplitudes == (3.0,)
    assert s2.white_noise_density == 0.5


@pytest.mark.parametrize("kw", [dict(slope=-1.0), dict(slope=1.0, corner_freq=1500.0), dict(slope=1.0, seed=-1),
                                dict(slope=1.0, seed=2**64)])
def test_operating_point_rejects(kw):
    with pytest.raises(ValidationError):
        SensorOperatingPoint(**kw)


def test_trace_validation():
    with pytest.raises(ValidationError):
        TimeTrace(np.array([1.0]), 10.0)
    with pytest.raises(ValidationError):
        TimeTrace(np.array([1.0, np.nan]), 10.0)
    with pytest.raises(ValidationError):
        TimeTrace(np.zeros(4), 10.0, units="gauss")
    with pytest.raises(ValidationError):
        trace.volts_to_tesla(TimeTrace(np.zeros(4), 10.0, "tesla"), 1.0)


def test_zero_duration_rejected():
    with pytest.raises(ValidationError):
        trace.synthesize_trace(FieldScenario(), OP, 0.0)


def test_zero_scenario_gives_zero_trace():
    tr = trace.synthesize_trace(FieldScenario(), OP, 1.0)
    assert np.all(tr.samples == 0.0)


def test_seed_changes_samples_not_statistics():
    from nvmag import analysis

    sc = FieldScenario(white_noise_density=1e-10)
    a = trace.synthesize_trace(sc, OP, 50.0, lowpass=False)
    b = trace.synthesize_trace(sc, SensorOperatingPoint(slope=100.0, seed=11), 50.0, lowpass=False)
    assert not np.array_equal(a.samples, b.samples)
    ma = analysis.psd(a, 2048).median(10, 900)
    mb = analysis.psd(b, 2048).median(10, 900)
    assert ma == pytest.approx(mb, rel=0.03)


def test_sine_at_corner_is_3db_down():
    fs, fc = 2000.0, 159.0
    t = np.arange(int(40 * fs)) / fs
    tr = trace.lowpass_first_order(TimeTrace(np.sin(2 * np.pi * fc * t), fs), fc)
    amp = np.max(np.abs(tr.samples[-4000:]))
    assert amp == pytest.approx(1 / np.sqrt(2), rel=0.02)


def test_rolloff_between_2fc_and_10fc():
    from nvmag import analysis

    fc, fs = 159.0, 20000.0
    f = np.geomspace(2 * fc, 10 * fc, 50)
    slope, _ = analysis.loglog_slope(f, trace.lowpass_response(f, fc, fs))
    assert 20 * slope == pytest.approx(-20, abs=2)


def test_tesla_volts_roundtrip_identity(rng):
    tr = TimeTrace(rng.standard_normal(100) * 1e-9, 2000.0, "tesla")
    back = trace.volts_to_tesla(trace.tesla_to_volts(tr, 1565.0), 1565.0)
    np.testing.assert_allclose(back.samples, tr.samples, rtol=1e-12)
    zero = TimeTrace(np.zeros(10), 2000.0, "tesla")
    assert np.all(trace.tesla_to_volts(zero, 2.0).samples == 0)


def test_filtered_tone_amplitude():
    sc = FieldScenario(tones=((60.0, 1e-9, 0.0),))
    tr = trace.synthesize_trace(sc, OP, 10.0)
    field = trace.volts_to_tesla(tr, OP.slope, OP.gamma_e)
    h = trace.lowpass_response([60.0], OP.corner_freq, OP.sample_rate)[0]
    assert np.max(np.abs(field.samples[4000:])) == pytest.approx(1e-9 * h, rel=2e-3)
