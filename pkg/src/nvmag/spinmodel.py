"""Five-level NV rate-equation model and CW ODMR spectrum synthesis.

Levels, in array order: ground ms=0 (g0), ground ms=+-1 (g1), excited ms=0
(e0), excited ms=+-1 (e1) and the singlet shelving manifold (s).  All rates
are in MHz (i.e. per microsecond), all public frequencies are ordinary MHz.

Microwave driving enters as an incoherent g0 <-> g1 transfer rate ``W`` that
depends on detuning through a Lorentzian of half width
``1 / (2 pi T2*)``.  Because ``W`` appears as a rank-one update of the
balance matrix, the excited-state population is a Moebius function of ``W``
and every hyperfine line of the CW spectrum is an exact Lorentzian whose
amplitude and half width follow from one linear solve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_grid, check_nonnegative, check_positive
from .errors import DegenerateModelError, InvalidParameterError, NotFoundError, ValidationError

N_LEVELS = 5
G0, G1, E0, E1, S = range(N_LEVELS)
LEVEL_NAMES = ("g0", "g1", "e0", "e1", "s")

ZFS_THERMAL_COEFF_KHZ_PER_K = -74.2
HYPERFINE_PROJECTIONS = (-1, 0, 1)

UNITS = ("volts", "contrast")


@dataclass(frozen=True)
class SpinModelParams:
    """Rate constants and coherence parameters of the five-level model.

    Attributes
    ----------
    k_r : float
        Radiative decay rate of both excited levels (MHz).
    k_isc0, k_isc1 : float
        Intersystem-crossing rates into the singlet from e0 and e1 (MHz).
        ``k_isc1 > k_isc0`` is what makes the ODMR line a fluorescence dip.
    k_s0, k_s1 : float
        Singlet decay rates into g0 and g1 (MHz).  One of them may be zero.
    t1_spin : float
        Ground-state spin relaxation time (ms).  ``math.inf`` disables it.
    t2_star : float
        Inhomogeneous dephasing time (us).
    a_par : float
        Axial 14N hyperfine splitting (MHz).
    gamma_e : float
        Electron gyromagnetic ratio (MHz/mT).
    """

    k_r: float
    k_isc0: float
    k_isc1: float
    k_s0: float
    k_s1: float
    t1_spin: float
    t2_star: float
    a_par: float = 2.16
    gamma_e: float = 28.0

    def __post_init__(self):
        for name in ("k_r", "k_isc0", "k_isc1", "t1_spin", "t2_star", "gamma_e"):
            v = float(getattr(self, name))
            if not v > 0 or math.isnan(v):
                raise InvalidParameterError(f"{name} must be > 0, got {v!r}")
        for name in ("k_s0", "k_s1", "a_par"):
            check_nonnegative(getattr(self, name), name)
        if self.k_s0 + self.k_s1 <= 0:
            raise InvalidParameterError("singlet must decay: k_s0 + k_s1 > 0")
        if not self.k_isc1 > self.k_isc0:
            raise InvalidParameterError("k_isc1 must exceed k_isc0 for a nonzero ODMR contrast")

    @property
    def gamma2(self) -> float:
        """Dephasing half width 1/(2 pi T2*) in MHz."""
        return 1.0 / (2.0 * math.pi * self.t2_star)

    @property
    def relaxation_rate(self) -> float:
        """g0 -> g1 (and g1 -> g0) spin-relaxation rate 1/(2 T1) in MHz."""
        return 1.0 / (2.0 * self.t1_spin * 1e3)


@dataclass(frozen=True)
class DriveConfig:
    """Optical and microwave drive.

    ``tones`` are offsets (MHz) of the simultaneously applied microwave tones
    relative to the carrier; ``(0.0,)`` is single-frequency driving.  Each tone
    has Rabi frequency ``omega_rabi``.
    """

    gamma_p: float
    omega_rabi: float
    omega_c: float = 0.0
    omega_0: float = 0.0
    tones: tuple = (0.0,)

    def __post_init__(self):
        check_nonnegative(self.gamma_p, "gamma_p")
        check_nonnegative(self.omega_rabi, "omega_rabi")
        tones = tuple(float(t) for t in self.tones)
        if not tones:
            raise InvalidParameterError("tones must be nonempty; use (0.0,) for single-tone drive")
        object.__setattr__(self, "tones", tones)


@dataclass(frozen=True)
class PopulationVector:
    n_g0: float
    n_g1: float
    n_e0: float
    n_e1: float
    n_s: float

    @classmethod
    def from_array(cls, arr):
        return cls(*(float(x) for x in arr))

    def as_array(self):
        return np.array([self.n_g0, self.n_g1, self.n_e0, self.n_e1, self.n_s])

    @property
    def excited(self) -> float:
        """Total excited-state population (the CW fluorescence proxy)."""
        return self.n_e0 + self.n_e1


@dataclass(frozen=True)
class Spectrum:
    freqs: np.ndarray
    values: np.ndarray
    units: str = "volts"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        freqs = check_grid(self.freqs, "freqs")
        values = np.asarray(self.values, dtype=float)
        if values.shape != freqs.shape:
            raise ValidationError("freqs and values must have equal length")
        if self.units not in UNITS:
            raise ValidationError(f"units must be one of {UNITS}, got {self.units!r}")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "values", values)


def mw_rate(omega_rabi, delta, t2_star):
    """Incoherent microwave transition rate W(delta) in MHz.

    ``W = omega**2 * g2 / (2 * (delta**2 + g2**2))`` with ``g2 = 1/(2 pi t2_star)``.
    Vectorised over ``delta``.
    """
    t2_star = float(t2_star)
    if not t2_star > 0:
        raise InvalidParameterError(f"t2_star must be > 0, got {t2_star!r}")
    g2 = 1.0 / (2.0 * math.pi * t2_star)
    delta = np.asarray(delta, dtype=float)
    w = omega_rabi**2 * g2 / (2.0 * (delta**2 + g2**2))
    return w if w.ndim else float(w)


def rate_matrix(params: SpinModelParams, gamma_p, w_mw):
    """Generator ``Q`` of the population dynamics, ``dn/dt = Q @ n`` (MHz)."""
    gr = params.relaxation_rate
    q = np.zeros((N_LEVELS, N_LEVELS))
    # pump, spin conserving
    q[E0, G0] += gamma_p
    q[E1, G1] += gamma_p
    # radiative decay
    q[G0, E0] += params.k_r
    q[G1, E1] += params.k_r
    # intersystem crossing
    q[S, E0] += params.k_isc0
    q[S, E1] += params.k_isc1
    # singlet decay
    q[G0, S] += params.k_s0
    q[G1, S] += params.k_s1
    # microwave mixing plus symmetric spin relaxation
    q[G1, G0] += w_mw + gr
    q[G0, G1] += w_mw + gr
    q -= np.diag(q.sum(axis=0))
    return q


def _balance_system(params, gamma_p):
    a = rate_matrix(params, gamma_p, 0.0)
    a[S, :] = 1.0
    b = np.zeros(N_LEVELS)
    b[S] = 1.0
    return a, b


def _solve(a, b):
    try:
        if not np.isfinite(np.linalg.cond(a)) or np.linalg.cond(a) > 1e14:
            raise np.linalg.LinAlgError("ill-conditioned")
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise DegenerateModelError(f"balance matrix is singular: {exc}") from None


def steady_state(params: SpinModelParams, gamma_p, w_mw) -> PopulationVector:
    """Steady-state populations for pump rate ``gamma_p`` and MW rate ``w_mw`` (MHz)."""
    check_nonnegative(gamma_p, "gamma_p")
    check_nonnegative(w_mw, "w_mw")
    a = rate_matrix(params, gamma_p, w_mw)
    a[S, :] = 1.0
    b = np.zeros(N_LEVELS)
    b[S] = 1.0
    n = _solve(a, b)
    if np.any(n < -1e-12):
        raise DegenerateModelError(f"negative steady-state population {n.min():.3e}")
    n = np.clip(n, 0.0, None)
    n /= n.sum()
    return PopulationVector.from_array(n)


def fluorescence(pop: PopulationVector, k_r) -> float:
    """Photon emission rate per centre (MHz): ``k_r * (n_e0 + n_e1)``."""
    return k_r * (pop.n_e0 + pop.n_e1)


@dataclass(frozen=True)
class LineResponse:
    """Excited-population deficit as a function of the MW rate for one pump rate.

    ``deficit(W) = deficit_max * W / (W + w_sat)`` where the deficit is
    ``I(W=0) - I(W)``; ``i_dark`` is ``I(W=0)``, the off-resonance level.
    """

    i_dark: float
    deficit_max: float
    w_sat: float

    def deficit(self, w):
        w = np.asarray(w, dtype=float)
        if math.isinf(self.w_sat):
            return self.deficit_max * w
        return self.deficit_max * w / (w + self.w_sat)


def line_response(params: SpinModelParams, gamma_p) -> LineResponse:
    """Closed-form dependence of the excited population on the MW rate.

    The MW term is ``-W u u^T`` with ``u = e_g0 - e_g1``; Sherman-Morrison
    then gives ``n(W) = n0 + W (u.n0) z / (1 - W u.z)`` with ``z = A0^-1 u``.
    """
    check_nonnegative(gamma_p, "gamma_p")
    a, b = _balance_system(params, gamma_p)
    n0 = _solve(a, b)
    u = np.zeros(N_LEVELS)
    u[G0], u[G1] = 1.0, -1.0
    z = _solve(a, u)
    c = u @ z
    i_dark = float(n0[E0] + n0[E1])
    un0 = float(u @ n0)
    ze = float(z[E0] + z[E1])
    if c == 0.0:
        return LineResponse(i_dark, -un0 * ze, math.inf)
    w_sat = -1.0 / float(c)
    if not w_sat > 0:
        raise DegenerateModelError(f"non-positive MW saturation rate {w_sat!r}")
    return LineResponse(i_dark, -un0 * ze * w_sat, w_sat)


def hwhm(params: SpinModelParams, gamma_p, omega_rabi) -> float:
    """Analytic half width at half maximum (MHz) of a single-tone line."""
    resp = line_response(params, gamma_p)
    g2 = params.gamma2
    w0 = omega_rabi**2 / (2.0 * g2)
    if math.isinf(resp.w_sat):
        return g2
    return g2 * math.sqrt(1.0 + w0 / resp.w_sat)


def line_rates(params: SpinModelParams, omega_rabi, detuning, tones=(0.0,)):
    """Total MW rate seen by each hyperfine line.

    Returns an array of shape ``(3,) + detuning.shape``.  ``detuning`` is the
    carrier offset ``omega_c - omega_0`` (MHz); line ``m_I`` sits at
    ``omega_0 - m_I * a_par``.
    """
    detuning = np.asarray(detuning, dtype=float)
    out = np.zeros((len(HYPERFINE_PROJECTIONS),) + detuning.shape)
    for i, m_i in enumerate(HYPERFINE_PROJECTIONS):
        for t in tones:
            out[i] += mw_rate(omega_rabi, detuning + t + m_i * params.a_par, params.t2_star)
    return out


def deficit_profile(params, response: LineResponse, omega_rabi, detuning, tones=(0.0,)):
    """Summed excited-population deficit of the three hyperfine lines."""
    return response.deficit(line_rates(params, omega_rabi, detuning, tones)).sum(axis=0)


def cw_spectrum(params: SpinModelParams, drive: DriveConfig, freq_grid, v0, units="volts") -> Spectrum:
    """CW ODMR spectrum: three hyperfine Lorentzians of the excited-population deficit.

    Values are ``v0 * (I_dark - I(omega_c))`` in volts, or the bare population
    deficit for ``units="contrast"``; zero far from resonance, positive on a
    dip.  ``v0`` is the detection scale in volts per unit excited population.
    """
    grid = check_grid(freq_grid)
    v0 = check_positive(v0, "v0")
    if units not in UNITS:
        raise ValidationError(f"units must be one of {UNITS}")
    resp = line_response(params, drive.gamma_p)
    values = deficit_profile(params, resp, drive.omega_rabi, grid - drive.omega_0, drive.tones)
    if units == "volts":
        values = v0 * values
    meta = {"i_dark": resp.i_dark, "w_sat": resp.w_sat}
    return Spectrum(grid, values, units, meta)


def _crossing(x0, x1, y0, y1, level):
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def linewidth(spectrum: Spectrum) -> float:
    """Half width at half maximum of the single dominant dip (MHz).

    Locates the extremum, then the half-contrast crossing on each side by
    linear interpolation.  The far-detuned baseline is taken as zero.
    """
    y = spectrum.values
    x = spectrum.freqs
    if y.size < 3:
        raise NotFoundError("spectrum too short to resolve a line")
    if np.max(y) < -np.min(y):
        y = -y
    k = int(np.argmax(y))
    peak = y[k]
    if not peak > 0:
        raise NotFoundError("no resolvable dip: flat spectrum")
    half = 0.5 * peak
    left = np.nonzero(y[:k] < half)[0]
    right = np.nonzero(y[k + 1 :] < half)[0]
    if left.size == 0 or right.size == 0:
        raise NotFoundError("half-maximum crossing outside the frequency grid")
    i = left[-1]
    j = k + 1 + right[0]
    x_lo = _crossing(x[i], x[i + 1], y[i], y[i + 1], half)
    x_hi = _crossing(x[j - 1], x[j], y[j - 1], y[j], half)
    return 0.5 * (x_hi - x_lo)


def zeeman_shift(b_par, projection_angle, gamma_e=28.0):
    """Resonance shift (MHz) for field ``b_par`` (mT) at ``projection_angle`` (degrees)."""
    check_positive(gamma_e, "gamma_e")
    return gamma_e * b_par * math.cos(math.radians(projection_angle))


def thermal_shift(delta_t):
    """Zero-field-splitting shift (kHz) for a temperature change ``delta_t`` (K)."""
    return ZFS_THERMAL_COEFF_KHZ_PER_K * delta_t
