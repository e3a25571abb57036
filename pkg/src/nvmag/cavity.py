"""Optical cavity power budget: finesse and loss, intracavity power, pump rate,
saturation fits and a decomposition of the diamond round-trip loss."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from ._validation import check_nonnegative, check_open_unit, check_positive
from .errors import (
    FitError,
    InvalidMeasurementError,
    NegativeConcentrationError,
    NoPhysicalRootError,
    ValidationError,
)
from .units import DIAMOND_CARBON_DENSITY_PER_MM3

CONVENTIONS = ("intensity", "amplitude")
S_POLARIZED_FRACTION = 0.8


@dataclass(frozen=True)
class CavityConfig:
    """Measured cavity quantities.

    ``path_len`` is the round-trip optical path through the diamond (mm) and
    ``reflection_fraction`` the fraction of intracavity power reflected off
    the diamond surfaces.
    """

    r1: float
    r2: float
    finesse_empty: float
    finesse_loaded: float
    path_len: float
    reflection_fraction: float = 0.0
    s_pol_fraction: float = S_POLARIZED_FRACTION

    def __post_init__(self):
        check_open_unit(self.r1, "r1")
        check_open_unit(self.r2, "r2")
        for name in ("finesse_empty", "finesse_loaded"):
            if not float(getattr(self, name)) > 1:
                raise ValidationError(f"{name} must be > 1")
        check_positive(self.path_len, "path_len", error=ValidationError)
        check_nonnegative(self.reflection_fraction, "reflection_fraction", error=ValidationError)
        if not 0.0 <= self.s_pol_fraction <= 1.0:
            raise ValidationError("s_pol_fraction must lie in [0, 1]")

    @property
    def t_in(self) -> float:
        """Input-mirror transmission, assuming a lossless coating."""
        return 1.0 - self.r1


@dataclass(frozen=True)
class AbsorptionBudget:
    alpha_total: float
    alpha_ab: float
    alpha_surf: float
    alpha_sc: float
    alpha_br: float
    path_len: float
    convention: str = "intensity"

    def recombine(self) -> float:
        ell = self.path_len
        return self.alpha_ab * ell + 4 * self.alpha_surf + 4 * self.alpha_sc + self.alpha_br * ell


def loss_from_finesse(finesse) -> float:
    """Round-trip loss product from a measured finesse.

    Positive root of ``F x**2 + pi x - F = 0`` with ``x = sqrt(rho)``.
    """
    f = float(finesse)
    if not f > math.pi / 2 or not math.isfinite(f):
        raise NoPhysicalRootError(f"finesse must exceed pi/2, got {finesse!r}")
    # rationalised root, no cancellation at large F
    x = 2.0 * f / (math.pi + math.sqrt(math.pi**2 + 4.0 * f * f))
    return x * x


def finesse_from_reflectivities(r1, r2) -> float:
    """Projected finesse ``pi sqrt(rho) / (1 - rho)`` for ``rho = sqrt(r1 r2)``."""
    r1 = check_open_unit(r1, "r1")
    r2 = check_open_unit(r2, "r2")
    rho = math.sqrt(r1 * r2)
    if rho >= 1.0 - 1e-9:
        raise ValidationError("reflectivity product too close to 1")
    return math.pi * math.sqrt(rho) / (1.0 - rho)


def intracavity_power(p_in, t_in, rho) -> float:
    """Circulating power (W): ``p_in t_in / (1 - rho)**2``."""
    p_in = check_nonnegative(p_in, "p_in", error=ValidationError)
    t_in = float(t_in)
    if not 0.0 < t_in <= 1.0:
        raise ValidationError(f"t_in must lie in (0, 1], got {t_in!r}")
    rho = check_open_unit(rho, "rho")
    return p_in * t_in / (1.0 - rho) ** 2


def pump_rate(p_cav, epsilon) -> float:
    """Optical pump rate (MHz) from intracavity power (W) and ``epsilon`` (kHz/mW)."""
    p_cav = check_nonnegative(p_cav, "p_cav", error=ValidationError)
    epsilon = check_positive(epsilon, "epsilon", error=ValidationError)
    return epsilon / 4.0 * (p_cav * 1e3) * 1e-3


def power_for_pump_rate(gamma_p, epsilon) -> float:
    """Inverse of :func:`pump_rate`: intracavity power (W) giving ``gamma_p``."""
    epsilon = check_positive(epsilon, "epsilon", error=ValidationError)
    return check_nonnegative(gamma_p, "gamma_p") * 4.0 / epsilon


def saturation_efficiency(power, p_sat):
    """Fraction of the saturated rate reached at ``power``: P / (P + P_sat)."""
    power = np.asarray(power, dtype=float)
    out = power / (power + p_sat)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SaturationFit:
    r_sat: float
    p_sat: float
    residual_norm: float
    nfev: int

    def predict(self, power):
        return self.r_sat * saturation_efficiency(power, self.p_sat)

    def efficiency(self, power):
        return saturation_efficiency(power, self.p_sat)


def fit_saturation(points, *, xtol=1e-10, max_nfev=2000) -> SaturationFit:
    """Least-squares fit of ``R = R_sat P / (P + P_sat)`` to (power, flux) pairs.

    Levenberg-Marquardt from the fixed start ``R_sat = max(flux)``,
    ``P_sat = median(power)``.  Data are rescaled to order one before fitting
    so the result is equivariant under a change of power or flux units.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValidationError("need at least 3 (power, flux) pairs")
    p, r = pts[:, 0], pts[:, 1]
    if not np.all(np.isfinite(pts)):
        raise ValidationError("non-finite saturation data")
    if np.any(p < 0) or np.unique(p).size != p.size:
        raise ValidationError("powers must be nonnegative and distinct")
    p_scale = float(np.median(p))
    r_scale = float(np.max(np.abs(r)))
    if p_scale <= 0 or r_scale <= 0:
        raise ValidationError("degenerate saturation data")
    ps, rs = p / p_scale, r / r_scale

    def resid(x):
        return x[0] * ps / (ps + x[1]) - rs

    x0 = np.array([float(np.max(rs)), 1.0])
    try:
        res = least_squares(resid, x0, method="lm", xtol=xtol, ftol=xtol, gtol=1e-12, max_nfev=max_nfev)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FitError(f"saturation fit failed: {exc}", {"x0": x0.tolist()}) from None
    if not res.success or res.x[1] <= 0 or not np.all(np.isfinite(res.x)):
        raise FitError(
            "saturation fit did not converge",
            {"status": int(res.status), "message": res.message, "nfev": int(res.nfev), "x": res.x.tolist()},
        )
    r_sat, p_sat = res.x[0] * r_scale, res.x[1] * p_scale
    resid_norm = float(np.linalg.norm(r_sat * p / (p + p_sat) - r))
    return SaturationFit(float(r_sat), float(p_sat), resid_norm, int(res.nfev))


def absorption_budget(cfg: CavityConfig, convention="intensity") -> AbsorptionBudget:
    """Split the diamond-induced round-trip loss into its components.

    ``alpha_total`` is ``ln(rho_empty / rho_loaded)`` for the intensity
    convention and twice that for the amplitude convention.  Surface-reflected
    power is assigned to birefringence loss (s-polarized share) and surface
    scattering (the remainder); surface absorption is neglected and bulk
    absorption closes the budget.
    """
    if convention not in CONVENTIONS:
        raise ValidationError(f"convention must be one of {CONVENTIONS}")
    if cfg.finesse_loaded >= cfg.finesse_empty:
        raise InvalidMeasurementError("loaded finesse must be below empty-cavity finesse")
    rho_e = loss_from_finesse(cfg.finesse_empty)
    rho_l = loss_from_finesse(cfg.finesse_loaded)
    alpha = math.log(rho_e / rho_l)
    if convention == "amplitude":
        alpha *= 2.0
    ell = cfg.path_len
    refl = cfg.reflection_fraction
    alpha_br = cfg.s_pol_fraction * refl / ell
    alpha_sc = (1.0 - cfg.s_pol_fraction) * refl / 4.0
    alpha_ab = (alpha - refl) / ell
    if alpha_ab < 0:
        raise InvalidMeasurementError(
            f"reflection loss {refl} exceeds total round-trip loss {alpha:.4g}"
        )
    return AbsorptionBudget(alpha, alpha_ab, 0.0, alpha_sc, alpha_br, ell, convention)


def nv_concentration(alpha_ab, alpha_background, sigma_nv):
    """NV density (mm^-3) and concentration (ppb) from excess absorption."""
    sigma_nv = check_positive(sigma_nv, "sigma_nv", error=ValidationError)
    excess = float(alpha_ab) - float(alpha_background)
    if excess < 0:
        raise NegativeConcentrationError("alpha_ab below background absorption")
    density = excess / sigma_nv
    return density, density / DIAMOND_CARBON_DENSITY_PER_MM3 * 1e9


def centers_in_volume(density, volume):
    """Number of centres in ``volume`` (mm^3) at ``density`` (mm^-3)."""
    return check_nonnegative(density, "density") * check_nonnegative(volume, "volume")
