"""Forward model for magnetometer voltage traces.

A field scenario (sinusoids, mains hum, white noise, random-walk drift and a
thermal ramp) is converted to a resonance shift, mapped to volts through the
lock-in slope at line centre, corrupted with electronic noise and passed
through the output low-pass.  Randomness comes from a single
``numpy.random.default_rng(seed)`` (PCG64) stream drawn in a fixed order:
field white noise, drift steps, electronic noise.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter, lfilter_zi

from ._validation import check_nonnegative, check_positive, check_series
from .errors import ValidationError
from .spinmodel import thermal_shift
from .units import MT_PER_T, tesla_to_mhz

TRACE_UNITS = ("volts", "tesla")


class RangeWarning(UserWarning):
    """Field excursion leaves the linear region of the lock-in line."""


@dataclass(frozen=True)
class FieldScenario:
    """Magnetic environment.

    ``tones`` holds ``(frequency_hz, amplitude_t, phase_rad)`` triples.
    ``hum_amplitudes`` are the amplitudes (T) of the 1st, 3rd, 5th ... harmonic
    of ``hum_fundamental``.  Noise densities are one-sided.
    """

    tones: tuple = ()
    hum_fundamental: float = 50.0
    hum_amplitudes: tuple = ()
    white_noise_density: float = 0.0
    drift_rate: float = 0.0
    temp_drift: float = 0.0

    def __post_init__(self):
        tones = tuple((float(f), float(a), float(p)) for f, a, p in self.tones)
        for f, a, _ in tones:
            check_positive(f, "tone frequency", error=ValidationError)
            check_nonnegative(a, "tone amplitude", error=ValidationError)
        check_positive(self.hum_fundamental, "hum_fundamental", error=ValidationError)
        hum = tuple(check_nonnegative(a, "hum amplitude", error=ValidationError) for a in self.hum_amplitudes)
        check_nonnegative(self.white_noise_density, "white_noise_density", error=ValidationError)
        check_nonnegative(self.drift_rate, "drift_rate", error=ValidationError)
        if not math.isfinite(self.temp_drift):
            raise ValidationError("temp_drift must be finite")
        object.__setattr__(self, "tones", tones)
        object.__setattr__(self, "hum_amplitudes", hum)

    def scaled(self, factor):
        """Copy with every deterministic field amplitude multiplied by ``factor``."""
        return FieldScenario(
            tuple((f, a * factor, p) for f, a, p in self.tones),
            self.hum_fundamental,
            tuple(a * factor for a in self.hum_amplitudes),
            self.white_noise_density,
            self.drift_rate,
            self.temp_drift,
        )


@dataclass(frozen=True)
class SensorOperatingPoint:
    """Slope at line centre (V/MHz) and acquisition settings.

    ``linewidth`` (HWHM, MHz) is optional; when given, field excursions larger
    than half of it raise a :class:`RangeWarning`.
    """

    slope: float
    gamma_e: float = 28.0
    corner_freq: float = 159.0
    sample_rate: float = 2000.0
    electronic_noise: float = 0.0
    seed: int = 0
    linewidth: float | None = None

    def __post_init__(self):
        check_nonnegative(self.slope, "slope", error=ValidationError)
        check_positive(self.gamma_e, "gamma_e", error=ValidationError)
        check_positive(self.corner_freq, "corner_freq", error=ValidationError)
        check_positive(self.sample_rate, "sample_rate", error=ValidationError)
        if not self.sample_rate > 2 * self.corner_freq:
            raise ValidationError("sample_rate must exceed twice the corner frequency")
        check_nonnegative(self.electronic_noise, "electronic_noise", error=ValidationError)
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be an integer in [0, 2**64)")
        if self.linewidth is not None:
            check_positive(self.linewidth, "linewidth", error=ValidationError)


@dataclass(frozen=True)
class TimeTrace:
    samples: np.ndarray
    sample_rate: float
    units: str = "volts"
    seed: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        s = check_series(self.samples, "samples", min_len=2)
        check_positive(self.sample_rate, "sample_rate", error=ValidationError)
        if self.units not in TRACE_UNITS:
            raise ValidationError(f"units must be one of {TRACE_UNITS}")
        object.__setattr__(self, "samples", s)

    @property
    def times(self):
        return np.arange(self.samples.size) / self.sample_rate

    @property
    def duration(self):
        return self.samples.size / self.sample_rate

    def replace(self, samples, units=None):
        return TimeTrace(samples, self.sample_rate, units or self.units, self.seed, dict(self.meta))


def _pz_response(p, q, freqs, fs):
    z = np.exp(-2j * np.pi * freqs / fs)
    return np.abs((1 - p) / (1 - q) * (1 - q * z) / (1 - p * z))


@lru_cache(maxsize=64)
def _design(ratio):
    fs = 1.0
    fc = ratio
    f = np.linspace(0.0, 0.5, 1001)
    target = 1.0 / np.sqrt(1.0 + (f / fc) ** 2)
    inner = f <= 0.25

    def cost(x):
        err = np.abs(_pz_response(x[0], x[1], f, fs) / target - 1.0)
        return err.max() + 1e3 * max(0.0, err[inner].max() - 0.0195)

    x0 = [math.exp(-2 * math.pi * fc), -0.12]
    res = minimize(cost, x0, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
    p, q = (float(v) for v in res.x)
    if not (abs(p) < 1 and abs(q) < 1):
        p, q = math.exp(-2 * math.pi * fc), 0.0
    return p, q


def lowpass_coefficients(f_c, sample_rate):
    """First-order section ``(b, a)`` approximating ``1/sqrt(1 + (f/f_c)**2)``.

    One pole and one zero, unity gain at DC.  The pole/zero pair minimises the
    worst relative magnitude error over the whole Nyquist band while keeping it
    below 2% up to a quarter of the sample rate.
    """
    f_c = check_positive(f_c, "f_c", error=ValidationError)
    fs = check_positive(sample_rate, "sample_rate", error=ValidationError)
    if not f_c < fs / 2:
        raise ValidationError("corner frequency must be below Nyquist")
    p, q = _design(round(f_c / fs, 12))
    g = (1 - p) / (1 - q)
    return np.array([g, -g * q]), np.array([1.0, -p])


def lowpass_response(freqs, f_c, sample_rate):
    b, a = lowpass_coefficients(f_c, sample_rate)
    return _pz_response(-a[1], -b[1] / b[0], np.asarray(freqs, dtype=float), sample_rate)


def lowpass_first_order(trace: TimeTrace, f_c) -> TimeTrace:
    """Apply the first-order low-pass, starting from the steady state of the first sample."""
    b, a = lowpass_coefficients(f_c, trace.sample_rate)
    x = trace.samples
    y, _ = lfilter(b, a, x, zi=lfilter_zi(b, a) * x[0])
    return trace.replace(y)


def field_signal(scenario: FieldScenario, times, rng: np.random.Generator, sample_rate):
    """Field (T) at ``times``; consumes two normal blocks from ``rng``."""
    n = times.size
    b = np.zeros(n)
    for f, a, ph in scenario.tones:
        b += a * np.sin(2 * np.pi * f * times + ph)
    for k, a in enumerate(scenario.hum_amplitudes):
        b += a * np.sin(2 * np.pi * (2 * k + 1) * scenario.hum_fundamental * times)
    white = rng.standard_normal(n)
    steps = rng.standard_normal(n)
    b += scenario.white_noise_density * math.sqrt(sample_rate / 2.0) * white
    walk = np.cumsum(steps) * scenario.drift_rate * math.sqrt(1.0 / sample_rate)
    return b + walk


def synthesize_trace(scenario: FieldScenario, op_point: SensorOperatingPoint, duration, *,
                     lowpass=True) -> TimeTrace:
    """Voltage trace (V) at the lock-in output for ``duration`` seconds.

    ``lowpass=False`` returns the signal before the output filter.
    """
    fs = op_point.sample_rate
    n = int(round(check_positive(duration, "duration", error=ValidationError) * fs))
    if n < 2:
        raise ValidationError("duration too short for two samples")
    t = np.arange(n) / fs
    rng = np.random.default_rng(int(op_point.seed))
    b = field_signal(scenario, t, rng, fs)
    shift = tesla_to_mhz(b, op_point.gamma_e)
    if op_point.linewidth is not None and np.max(np.abs(shift)) > op_point.linewidth / 2:
        warnings.warn(
            f"field excursion {np.max(np.abs(shift)):.3g} MHz exceeds half the linewidth",
            RangeWarning, stacklevel=2,
        )
    shift = shift + thermal_shift(scenario.temp_drift * t) * 1e-3
    elec = rng.standard_normal(n) * op_point.electronic_noise * math.sqrt(fs / 2.0)
    v = op_point.slope * shift + elec
    tr = TimeTrace(v, fs, "volts", int(op_point.seed), {"duration_s": n / fs})
    if lowpass:
        tr = lowpass_first_order(tr, op_point.corner_freq)
    return tr


def volts_to_tesla(trace: TimeTrace, slope, gamma_e=28.0) -> TimeTrace:
    """Convert a voltage trace to field using the line-centre slope (V/MHz)."""
    if trace.units != "volts":
        raise ValidationError(f"expected a trace in volts, got {trace.units}")
    slope = check_positive(slope, "slope", error=ValidationError)
    gamma_e = check_positive(gamma_e, "gamma_e", error=ValidationError)
    return trace.replace(trace.samples / (slope * gamma_e * MT_PER_T), "tesla")


def tesla_to_volts(trace: TimeTrace, slope, gamma_e=28.0) -> TimeTrace:
    if trace.units != "tesla":
        raise ValidationError(f"expected a trace in tesla, got {trace.units}")
    slope = check_positive(slope, "slope", error=ValidationError)
    gamma_e = check_positive(gamma_e, "gamma_e", error=ValidationError)
    return trace.replace(trace.samples * slope * gamma_e * MT_PER_T, "volts")
