"""Noise analysis of magnetometer traces: ASD, smoothing, Allan deviation,
power-law fits and Lorentzian line fitting."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks, welch
from scipy.stats import linregress

from ._validation import check_positive, check_series
from .errors import FitError, ValidationError
from .spinmodel import Spectrum
from .trace import TimeTrace

WINDOW = "hann"
ESTIMATORS = ("overlapping", "non-overlapping")
DEFAULT_SEGMENT = 16384


@dataclass(frozen=True)
class NoisePSD:
    freqs: np.ndarray
    asd: np.ndarray
    n_averages: int
    units: str = "volts"

    def band(self, lo, hi):
        sel = (self.freqs >= lo) & (self.freqs <= hi)
        return self.freqs[sel], self.asd[sel]

    def median(self, lo, hi):
        _, a = self.band(lo, hi)
        if a.size == 0:
            raise ValidationError(f"no frequency bins in [{lo}, {hi}] Hz")
        return float(np.median(a))


@dataclass(frozen=True)
class AllanCurve:
    taus: np.ndarray
    sigmas: np.ndarray
    estimator: str = "overlapping"
    counts: np.ndarray | None = None

    def minimum(self):
        k = int(np.argmin(self.sigmas))
        return float(self.taus[k]), float(self.sigmas[k])


def psd(trace: TimeTrace, segment_len=None, overlap_fraction=0.5, *, nfft=None) -> NoisePSD:
    """One-sided amplitude spectral density by Welch averaging.

    Hann window, constant detrend per segment; the density scaling divides by
    ``fs * sum(w**2)`` so that integrating ``asd**2`` over frequency returns the
    variance.
    """
    x = trace.samples
    n = x.size
    if segment_len is None:
        segment_len = min(n, DEFAULT_SEGMENT)
    segment_len = int(segment_len)
    if segment_len < 8 or segment_len > n:
        raise ValidationError(f"segment_len must lie in [8, {n}], got {segment_len}")
    if not 0.0 <= overlap_fraction <= 0.9:
        raise ValidationError("overlap_fraction must lie in [0, 0.9]")
    noverlap = int(overlap_fraction * segment_len)
    f, pxx = welch(x, trace.sample_rate, window=WINDOW, nperseg=segment_len, noverlap=noverlap,
                   nfft=nfft, detrend="constant", scaling="density")
    n_avg = 1 + (n - segment_len) // (segment_len - noverlap)
    return NoisePSD(f, np.sqrt(pxx), int(n_avg), trace.units)


def average_psd(spectra) -> NoisePSD:
    """Average several ASDs in power (e.g. consecutive traces)."""
    spectra = list(spectra)
    if not spectra:
        raise ValidationError("nothing to average")
    f = spectra[0].freqs
    for s in spectra[1:]:
        if s.freqs.shape != f.shape or not np.allclose(s.freqs, f):
            raise ValidationError("spectra have different frequency grids")
    power = np.mean([s.asd**2 for s in spectra], axis=0)
    return NoisePSD(f, np.sqrt(power), sum(s.n_averages for s in spectra), spectra[0].units)


def _check_sg(window, order):
    if int(window) != window or window < 1 or window % 2 == 0:
        raise ValidationError(f"window must be a positive odd integer, got {window!r}")
    if int(order) != order or not 0 <= order < window:
        raise ValidationError(f"order must satisfy 0 <= order < window, got {order!r}")
    return int(window), int(order)


def _fit_matrix(positions, order):
    """Least-squares projector mapping samples to polynomial coefficients."""
    v = np.vander(np.asarray(positions, dtype=float), order + 1, increasing=True)
    return np.linalg.pinv(v)


def savgol_kernel(window, order):
    """Weights that smooth the centre sample of a window."""
    window, order = _check_sg(window, order)
    half = window // 2
    return _fit_matrix(np.arange(-half, half + 1), order)[0]


def savitzky_golay(series, window=11, order=3):
    """Local polynomial least-squares smoothing.

    Interior points use the centre-row kernel; the first and last ``window//2``
    points are taken from a polynomial fitted to the first (last) ``window``
    samples.
    """
    window, order = _check_sg(window, order)
    x = check_series(series, "series", min_len=window)
    half = window // 2
    out = np.empty_like(x)
    k = savgol_kernel(window, order)
    out[half : x.size - half] = np.convolve(x, k[::-1], mode="valid")
    if half:
        pos = np.arange(window)
        proj = _fit_matrix(pos, order)
        v_edge = np.vander(pos[:half].astype(float), order + 1, increasing=True)
        out[:half] = v_edge @ (proj @ x[:window])
        v_tail = np.vander(pos[window - half :].astype(float), order + 1, increasing=True)
        out[x.size - half :] = v_tail @ (proj @ x[x.size - window :])
    return out


def _tau_to_m(tau, fs, n):
    m = tau * fs
    mi = int(round(m))
    if abs(m - mi) > 1e-9 * max(1.0, m):
        raise ValidationError(f"tau={tau} s is not a multiple of the sample period")
    if mi < 2:
        raise ValidationError(f"tau={tau} s shorter than two sample periods")
    if mi * 3 > n:
        raise ValidationError(f"tau={tau} s longer than a third of the record")
    return mi


def default_taus(trace: TimeTrace, per_decade=20):
    """Log-spaced averaging times (s), 20 per decade, from 2 samples to a third of the record."""
    fs, n = trace.sample_rate, trace.samples.size
    m_hi = n // 3
    if m_hi < 2:
        raise ValidationError("trace too short for an Allan deviation")
    k = int(math.floor(per_decade * math.log10(m_hi / 2.0))) + 1
    ms = np.unique(np.round(2.0 * 10.0 ** (np.arange(k) / per_decade)).astype(int))
    ms = ms[(ms >= 2) & (ms <= m_hi)]
    return ms / fs


def allan_deviation(trace: TimeTrace, taus=None, estimator="overlapping") -> AllanCurve:
    """Allan deviation in the units of the trace.

    ``sigma^2(tau) = 0.5 <(ybar_{k+1} - ybar_k)^2>`` where ``ybar`` are
    averages over ``tau``; the overlapping estimator slides the bins one
    sample at a time.
    """
    if estimator not in ESTIMATORS:
        raise ValidationError(f"estimator must be one of {ESTIMATORS}")
    x = trace.samples
    n, fs = x.size, trace.sample_rate
    if taus is None:
        taus = default_taus(trace)
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if taus.size == 0 or np.any(np.diff(taus) <= 0):
        raise ValidationError("taus must be nonempty and increasing")
    ms = [_tau_to_m(t, fs, n) for t in taus]
    csum = np.concatenate(([0.0], np.cumsum(x - x.mean())))
    sig = np.empty(len(ms))
    cnt = np.empty(len(ms), dtype=int)
    for i, m in enumerate(ms):
        if estimator == "overlapping":
            ybar = (csum[m:] - csum[:-m]) / m
            d = ybar[m:] - ybar[:-m]
        else:
            k = n // m
            ybar = x[: k * m].reshape(k, m).mean(axis=1)
            d = np.diff(ybar)
        sig[i] = math.sqrt(0.5 * np.mean(d * d))
        cnt[i] = d.size
    return AllanCurve(np.array(ms) / fs, sig, estimator, cnt)


def extract_sensitivity(sigma, tau):
    """Field sensitivity (units/sqrt(Hz)) from an Allan deviation at ``tau`` seconds."""
    return float(sigma) * math.sqrt(check_positive(tau, "tau", error=ValidationError))


def loglog_slope(x, y, x_range=None):
    """Slope and its standard error of ``log y`` against ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValidationError("x and y must have the same shape")
    if x_range is not None:
        sel = (x >= x_range[0]) & (x <= x_range[1])
        x, y = x[sel], y[sel]
    if x.size < 3:
        raise ValidationError("need at least 3 points in range")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValidationError("log-log fit requires positive values")
    r = linregress(np.log(x), np.log(y))
    return float(r.slope), float(r.stderr)


def lorentzian_sum(x, centers, widths, amplitudes, baseline=0.0):
    x = np.asarray(x, dtype=float)
    out = np.full_like(x, float(baseline))
    for c, w, a in zip(centers, widths, amplitudes):
        out += a * w * w / ((x - c) ** 2 + w * w)
    return out


@dataclass(frozen=True)
class LorentzianFit:
    centers: np.ndarray
    widths: np.ndarray
    amplitudes: np.ndarray
    baseline: float
    residual_norm: float
    covariance_diag: np.ndarray
    nfev: int

    def predict(self, x):
        return lorentzian_sum(x, self.centers, self.widths, self.amplitudes, self.baseline)


def guess_lorentzians(spectrum: Spectrum, n_peaks):
    """Starting values from the ``n_peaks`` most prominent features."""
    x, y = spectrum.freqs, spectrum.values
    base = float(np.median(y))
    dev = y - base
    sign = 1.0 if np.max(dev) >= -np.min(dev) else -1.0
    idx, props = find_peaks(sign * dev, prominence=0)
    if idx.size < n_peaks:
        idx = np.argsort(-sign * dev)[:n_peaks]
        prom = sign * dev[idx]
    else:
        prom = props["prominences"]
    top = np.sort(idx[np.argsort(-prom, kind="stable")[:n_peaks]])
    span = x[-1] - x[0]
    width = max(span / (8.0 * n_peaks), 2 * np.min(np.diff(x)))
    return [(float(x[i]), width, float(dev[i])) for i in top], base


def fit_lorentzian_sum(spectrum: Spectrum, n_peaks, initial_guess=None, *, baseline=None, max_nfev=5000) -> LorentzianFit:
    """Fit ``baseline + sum a_i w_i^2 / ((x - c_i)^2 + w_i^2)``.

    ``initial_guess`` is a sequence of ``(center, width, amplitude)``; when
    omitted it is derived from the most prominent peaks.  Levenberg-Marquardt
    with fixed tolerances, so the result is deterministic.
    """
    n_peaks = int(n_peaks)
    if n_peaks < 1:
        raise ValidationError("n_peaks must be >= 1")
    x, y = spectrum.freqs, spectrum.values
    if x.size < 3 * n_peaks + 1:
        raise ValidationError("too few points for the requested number of peaks")
    if initial_guess is None:
        initial_guess, b0 = guess_lorentzians(spectrum, n_peaks)
    else:
        b0 = float(np.median(y))
    if baseline is not None:
        b0 = float(baseline)
    guess = np.asarray(initial_guess, dtype=float)
    if guess.shape != (n_peaks, 3):
        raise ValidationError("initial_guess must hold one (center, width, amplitude) per peak")
    x0 = np.concatenate([guess.ravel(), [b0]])
    scale = float(np.max(np.abs(y))) or 1.0

    def resid(p):
        q = p[:-1].reshape(n_peaks, 3)
        return (lorentzian_sum(x, q[:, 0], q[:, 1], q[:, 2], p[-1]) - y) / scale

    try:
        res = least_squares(resid, x0, method="lm", xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=max_nfev)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FitError(f"Lorentzian fit failed: {exc}", {"x0": x0.tolist()}) from None
    if res.status <= 0 or not np.all(np.isfinite(res.x)):
        raise FitError("Lorentzian fit did not converge",
                       {"status": int(res.status), "message": res.message, "nfev": int(res.nfev)})
    q = res.x[:-1].reshape(n_peaks, 3)
    r = res.fun * scale
    dof = max(x.size - res.x.size, 1)
    jac = res.jac * scale
    cov = np.linalg.pinv(jac.T @ jac) * float(r @ r) / dof
    order = np.argsort(q[:, 0], kind="stable")
    return LorentzianFit(
        q[order, 0], np.abs(q[order, 1]), q[order, 2], float(res.x[-1]),
        float(np.linalg.norm(r)), np.diag(cov).copy(), int(res.nfev),
    )


def beat_frequency(trace: TimeTrace, band=(2.0, 40.0), resolution=0.05):
    """Envelope beat frequency (Hz): peak of the ASD of the squared, detrended trace."""
    x = trace.samples - trace.samples.mean()
    env = x * x
    env = env - env.mean()
    fs = trace.sample_rate
    nfft = max(env.size, int(math.ceil(fs / resolution)))
    sq = TimeTrace(env, fs, trace.units)
    spec = psd(sq, segment_len=env.size, overlap_fraction=0.0, nfft=nfft)
    f, a = spec.band(*band)
    if f.size == 0:
        raise ValidationError("beat band outside the spectrum")
    return float(f[int(np.argmax(a))])


def noise_summary(trace: TimeTrace, *, segment_len=None):
    """Noise floor medians, Allan minimum and the sensitivity extracted there."""
    spec = psd(trace, segment_len)
    curve = allan_deviation(trace)
    tau, sig = curve.minimum()
    nyq = trace.sample_rate / 2
    hi = min(159.0, nyq)
    return {
        "asd_median_5_159": spec.median(5.0, hi),
        "asd_median_0p1_159": spec.median(0.1, hi),
        "allan_min_tau_s": tau,
        "allan_min_sigma": sig,
        "extracted_sensitivity": extract_sensitivity(sig, tau),
        "units": trace.units,
    }
