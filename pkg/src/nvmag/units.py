"""Unit conversions used across the package.

Frequencies in the spin/lock-in layer are ordinary (non-angular) MHz, fields are
tesla, gyromagnetic ratios are MHz/mT.
"""

ELEMENTARY_CHARGE = 1.602176634e-19  # C
DIAMOND_CARBON_DENSITY_PER_MM3 = 1.76e20  # 1.76e23 cm^-3, diamond atomic density

HZ_PER_MHZ = 1e6
MT_PER_T = 1e3


def gamma_e_hz_per_tesla(gamma_e_mhz_per_mt):
    """28 MHz/mT -> 2.8e10 Hz/T."""
    return gamma_e_mhz_per_mt * HZ_PER_MHZ * MT_PER_T


def slope_v_per_hz(slope_v_per_mhz):
    return slope_v_per_mhz / HZ_PER_MHZ


def tesla_to_mhz(field_t, gamma_e_mhz_per_mt):
    """Resonance shift (MHz) produced by a field (T) along the NV axis."""
    return field_t * MT_PER_T * gamma_e_mhz_per_mt


def mhz_to_tesla(shift_mhz, gamma_e_mhz_per_mt):
    return shift_mhz / (gamma_e_mhz_per_mt * MT_PER_T)
