"""scikit-learn style wrappers around the fitting, filtering and spectrum models.

Frequencies, powers and other 1-D inputs are passed as ``X`` with a single
column, following the usual ``(n_samples, n_features)`` convention.
"""
from __future__ import annotations

import numpy as np
from scipy.signal import lfilter, lfilter_zi
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import analysis, cavity, lockin, spinmodel
from .errors import ValidationError
from .spinmodel import Spectrum
from .trace import lowpass_coefficients, lowpass_response


def _column(X, name="X"):
    X = check_array(X, ensure_2d=True, dtype=float)
    if X.shape[1] != 1:
        raise ValidationError(f"{name} must have exactly one column, got {X.shape[1]}")
    return X[:, 0]


class SaturationCurveRegressor(RegressorMixin, BaseEstimator):
    """Fit ``R = R_sat P / (P + P_sat)`` to power/flux data."""

    def __init__(self, xtol=1e-10, max_nfev=2000):
        self.xtol = xtol
        self.max_nfev = max_nfev

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        if X.shape[1] != 1:
            raise ValidationError("X must hold a single power column")
        res = cavity.fit_saturation(np.c_[X[:, 0], y], xtol=self.xtol, max_nfev=self.max_nfev)
        self.r_sat_ = res.r_sat
        self.p_sat_ = res.p_sat
        self.residual_norm_ = res.residual_norm
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "p_sat_")
        p = _column(X)
        return self.r_sat_ * p / (p + self.p_sat_)

    def efficiency(self, X):
        check_is_fitted(self, "p_sat_")
        p = _column(X)
        return p / (p + self.p_sat_)


class LorentzianSumRegressor(RegressorMixin, BaseEstimator):
    """Sum of Lorentzians plus a constant baseline."""

    def __init__(self, n_peaks=3, initial_guess=None, max_nfev=5000):
        self.n_peaks = n_peaks
        self.initial_guess = initial_guess
        self.max_nfev = max_nfev

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        order = np.argsort(X[:, 0], kind="stable")
        spec = Spectrum(X[order, 0], y[order], "contrast")
        res = analysis.fit_lorentzian_sum(spec, self.n_peaks, self.initial_guess, max_nfev=self.max_nfev)
        self.centers_ = res.centers
        self.widths_ = res.widths
        self.amplitudes_ = res.amplitudes
        self.baseline_ = res.baseline
        self.residual_norm_ = res.residual_norm
        self.covariance_diag_ = res.covariance_diag
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "centers_")
        return analysis.lorentzian_sum(_column(X), self.centers_, self.widths_, self.amplitudes_, self.baseline_)


class SavitzkyGolaySmoother(TransformerMixin, BaseEstimator):
    """Column-wise Savitzky-Golay smoothing; stateless apart from input checks."""

    def __init__(self, window=11, order=3):
        self.window = window
        self.order = order

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        analysis.savgol_kernel(self.window, self.order)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=float)
        return np.column_stack([analysis.savitzky_golay(col, self.window, self.order) for col in X.T])


class FirstOrderLowPass(TransformerMixin, BaseEstimator):
    """Column-wise first-order low-pass for uniformly sampled data."""

    def __init__(self, corner_freq=159.0, sample_rate=2000.0):
        self.corner_freq = corner_freq
        self.sample_rate = sample_rate

    def fit(self, X=None, y=None):
        self.b_, self.a_ = lowpass_coefficients(self.corner_freq, self.sample_rate)
        if X is not None:
            self.n_features_in_ = check_array(X, dtype=float).shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "b_")
        X = check_array(X, dtype=float)
        zi = lfilter_zi(self.b_, self.a_)
        return np.column_stack([lfilter(self.b_, self.a_, c, zi=zi * c[0])[0] for c in X.T])

    def response(self, freqs):
        return lowpass_response(freqs, self.corner_freq, self.sample_rate)


class ODMRSpectrumModel(BaseEstimator):
    """CW ODMR line shape as a predictor of signal versus microwave frequency."""

    def __init__(self, params=None, drive=None, v0=1.0, units="volts"):
        self.params = params
        self.drive = drive
        self.v0 = v0
        self.units = units

    def fit(self, X=None, y=None):
        if self.params is None or self.drive is None:
            raise ValidationError("params and drive are required")
        self.line_response_ = spinmodel.line_response(self.params, self.drive.gamma_p)
        self.hwhm_ = spinmodel.hwhm(self.params, self.drive.gamma_p, self.drive.omega_rabi)
        return self

    def predict(self, X):
        check_is_fitted(self, "line_response_")
        f = _column(X)
        order = np.argsort(f, kind="stable")
        spec = spinmodel.cw_spectrum(self.params, self.drive, f[order], self.v0, self.units)
        out = np.empty_like(f)
        out[order] = spec.values
        return out


class LockInSpectrumModel(BaseEstimator):
    """Demodulated lock-in signal versus carrier frequency."""

    def __init__(self, params=None, drive=None, modulation=None, gain_a=5e4, v0=1.0):
        self.params = params
        self.drive = drive
        self.modulation = modulation
        self.gain_a = gain_a
        self.v0 = v0

    def fit(self, X=None, y=None):
        if self.params is None or self.drive is None:
            raise ValidationError("params and drive are required")
        self.modulation_ = self.modulation or lockin.ModulationConfig()
        self.modulation_.check_truncation()
        return self

    def predict(self, X):
        check_is_fitted(self, "modulation_")
        f = _column(X)
        order = np.argsort(f, kind="stable")
        spec = lockin.lockin_spectrum(self.params, self.drive, self.modulation_, f[order], self.gain_a, self.v0)
        out = np.empty_like(f)
        out[order] = spec.values
        return out

    def max_slope(self, X):
        check_is_fitted(self, "modulation_")
        f = np.sort(_column(X))
        spec = lockin.lockin_spectrum(self.params, self.drive, self.modulation_, f, self.gain_a, self.v0)
        return lockin.max_slope(spec)
