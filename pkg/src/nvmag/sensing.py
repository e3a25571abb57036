"""Lock-in slope exploration, noise budget and projected sensitivity."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from ._validation import check_grid, check_nonnegative, check_positive
from .errors import UndefinedSensitivityError, ValidationError
from .lockin import ModulationConfig, lockin_spectrum, max_slope, three_tone_drive
from .spinmodel import DriveConfig, SpinModelParams, line_response
from .units import ELEMENTARY_CHARGE, gamma_e_hz_per_tesla, slope_v_per_hz

NOISE_MODES = ("linear", "quadrature")
SLOPE_WINDOW_MHZ = 0.05
SLOPE_POINTS = 11


@dataclass(frozen=True)
class SlopeSurface:
    """Max lock-in slope (V/MHz) on a grid; rows follow ``gamma_p_axis``, columns ``omega_axis``."""

    omega_axis: np.ndarray
    gamma_p_axis: np.ndarray
    slopes: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.slopes, dtype=float)
        if s.shape != (len(self.gamma_p_axis), len(self.omega_axis)):
            raise ValidationError("slope matrix shape does not match axes")
        if np.any(s < 0):
            raise ValidationError("slopes must be nonnegative")
        object.__setattr__(self, "slopes", s)

    def argmax_omega(self):
        """Index of the best Rabi frequency for every pump rate."""
        return np.argmax(self.slopes, axis=1)

    def best(self):
        i, j = np.unravel_index(int(np.argmax(self.slopes)), self.slopes.shape)
        return float(self.gamma_p_axis[i]), float(self.omega_axis[j]), float(self.slopes[i, j])


@dataclass(frozen=True)
class NoiseBudget:
    shot: float
    lockin_input: float
    detector_load: float
    combination_mode: str
    total: float


def resonance_slope(params: SpinModelParams, gamma_p, omega_rabi, mod: ModulationConfig,
                    gain_a, v0, tones=None, omega_0=0.0, *, window=SLOPE_WINDOW_MHZ,
                    n_points=SLOPE_POINTS) -> float:
    """Max |dS_LI/d omega_c| (V/MHz) in a narrow window around the line centre.

    ``tones=None`` means three-tone drive at the hyperfine splitting.
    """
    if tones is None:
        tones = three_tone_drive(omega_0, params.a_par)
    drive = DriveConfig(gamma_p, omega_rabi, omega_0, omega_0, tuple(tones))
    grid = omega_0 + np.linspace(-window, window, n_points)
    return max_slope(lockin_spectrum(params, drive, mod, grid, gain_a, v0))[1]


def _axis(values, name):
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValidationError(f"{name} must be nonempty")
    return check_grid(np.sort(arr), name)


def sweep_slope(params: SpinModelParams, omega_grid, gamma_p_grid, mod: ModulationConfig,
                gain_a, v0, tones=None) -> SlopeSurface:
    """Resonance slope over an (Omega, Gamma_p) grid.

    Axes are sorted before evaluation, so permuted inputs give the same surface.
    """
    om = _axis(omega_grid, "omega_grid")
    gp = _axis(gamma_p_grid, "gamma_p_grid")
    out = np.empty((gp.size, om.size))
    for i, g in enumerate(gp):
        for j, o in enumerate(om):
            out[i, j] = resonance_slope(params, g, o, mod, gain_a, v0, tones)
    return SlopeSurface(om, gp, out)


def default_sweep_axes(n=21):
    """Log-spaced Omega in [0.1, 10] MHz and Gamma_p in [0.05, 10] MHz."""
    return np.geomspace(0.1, 10.0, n), np.geomspace(0.05, 10.0, n)


@dataclass(frozen=True)
class Enhancement:
    ratio: float
    omega_single: float
    slope_single: float
    omega_three: float
    slope_three: float


def optimal_slope(params, gamma_p, mod, gain_a, v0, tones, *, bounds=(0.01, 50.0)):
    """Maximise the resonance slope over the Rabi frequency at fixed pump rate.

    A coarse log scan brackets the optimum and a bounded scalar search refines it.
    """
    lo, hi = math.log(bounds[0]), math.log(bounds[1])
    scan = np.linspace(lo, hi, 41)
    vals = [resonance_slope(params, gamma_p, math.exp(x), mod, gain_a, v0, tones) for x in scan]
    k = int(np.argmax(vals))
    a, b = scan[max(k - 1, 0)], scan[min(k + 1, scan.size - 1)]
    res = minimize_scalar(
        lambda x: -resonance_slope(params, gamma_p, math.exp(x), mod, gain_a, v0, tones),
        bounds=(a, b), method="bounded", options={"xatol": 1e-6},
    )
    if -res.fun >= vals[k]:
        return math.exp(res.x), float(-res.fun)
    return math.exp(scan[k]), float(vals[k])


def three_tone_enhancement(params: SpinModelParams, gamma_p, mod: ModulationConfig, gain_a, v0) -> Enhancement:
    """Ratio of the best three-tone slope to the best single-tone slope.

    Each drive mode is optimised over its own Rabi frequency at the given pump
    rate, so the figure does not depend on how microwave power is split.
    """
    o1, s1 = optimal_slope(params, gamma_p, mod, gain_a, v0, (0.0,))
    o3, s3 = optimal_slope(params, gamma_p, mod, gain_a, v0, three_tone_drive(0.0, params.a_par))
    return Enhancement(s3 / s1, o1, s1, o3, s3)


def photocurrent(photon_rate, quantum_efficiency):
    """Photocurrent (A) for a detected photon rate (1/s)."""
    return ELEMENTARY_CHARGE * check_nonnegative(photon_rate, "photon_rate") * check_positive(
        quantum_efficiency, "quantum_efficiency"
    )


def shot_noise(photon_rate, quantum_efficiency, load_ohm) -> float:
    """Shot-noise voltage density (V/sqrt(Hz)) across ``load_ohm``: sqrt(2 e I) R."""
    i_dc = photocurrent(photon_rate, quantum_efficiency)
    return math.sqrt(2.0 * ELEMENTARY_CHARGE * i_dc) * check_positive(load_ohm, "load_ohm")


def photon_rate(n_emitters, per_emitter_rate, collection_efficiency):
    """Photon rate at the detector (1/s)."""
    return n_emitters * per_emitter_rate * collection_efficiency


def calibrate_emitter_rate(target_noise, n_emitters, collection_efficiency, quantum_efficiency, load_ohm):
    """Per-emitter photon rate (1/s) that produces ``target_noise`` V/sqrt(Hz)."""
    target = check_nonnegative(target_noise, "target_noise")
    i_dc = (target / check_positive(load_ohm, "load_ohm")) ** 2 / (2.0 * ELEMENTARY_CHARGE)
    rate = i_dc / (ELEMENTARY_CHARGE * check_positive(quantum_efficiency, "quantum_efficiency"))
    return rate / (check_positive(n_emitters, "n_emitters") * check_positive(collection_efficiency, "collection_efficiency"))


def dc_voltage(photon_rate_hz, quantum_efficiency, load_ohm):
    """Photodetector DC voltage (V) for the given detected photon rate."""
    return photocurrent(photon_rate_hz, quantum_efficiency) * load_ohm


def detection_scale(params: SpinModelParams, gamma_p, v_dc) -> float:
    """Volts per unit excited population, fixed by the off-resonance DC level."""
    i0 = line_response(params, gamma_p).i_dark
    if i0 <= 0:
        raise ValidationError("no excited population at this pump rate")
    return check_positive(v_dc, "v_dc") / i0


def noise_budget(shot, lockin_input, detector_load, mode="linear") -> NoiseBudget:
    """Combine noise densities linearly or in quadrature."""
    parts = [check_nonnegative(x, n) for x, n in
             ((shot, "shot"), (lockin_input, "lockin_input"), (detector_load, "detector_load"))]
    if mode == "linear":
        total = sum(parts)
    elif mode == "quadrature":
        total = math.sqrt(sum(x * x for x in parts))
    else:
        raise ValidationError(f"mode must be one of {NOISE_MODES}")
    return NoiseBudget(*parts, mode, total)


def sensitivity(max_slope_v_per_mhz, noise_total, gain_a, gamma_e=28.0) -> float:
    """Projected field sensitivity (T/sqrt(Hz)).

    ``A * noise / (slope * gamma_e)`` with the slope in V/Hz and gamma_e in
    Hz/T.  The slope is measured after the lock-in gain ``A``, which is why the
    gain reappears in the numerator.
    """
    slope = float(max_slope_v_per_mhz)
    if not slope > 0:
        raise UndefinedSensitivityError("sensitivity undefined for zero or negative slope")
    noise = check_nonnegative(noise_total, "noise_total")
    gain_a = check_positive(gain_a, "gain_a")
    gamma = gamma_e_hz_per_tesla(check_positive(gamma_e, "gamma_e"))
    return gain_a * noise / (slope_v_per_hz(slope) * gamma)


def required_slope(target_sensitivity, noise_total, gain_a, gamma_e=28.0) -> float:
    """Slope (V/MHz) that yields ``target_sensitivity`` T/sqrt(Hz)."""
    target = check_positive(target_sensitivity, "target_sensitivity")
    gamma = gamma_e_hz_per_tesla(check_positive(gamma_e, "gamma_e"))
    return gain_a * noise_total / (target * gamma) * 1e6
