"""Simulation and analysis toolkit for cavity-enhanced CW NV-ensemble magnetometry."""

__version__ = "0.1.0"

from .errors import NumericalError, NVMagError, ValidationError  # noqa: E402
from .spinmodel import (  # noqa: E402
    DriveConfig,
    PopulationVector,
    SpinModelParams,
    Spectrum,
    cw_spectrum,
    fluorescence,
    linewidth,
    mw_rate,
    steady_state,
    thermal_shift,
    zeeman_shift,
)
from .lockin import ModulationConfig, fm_sidebands, lockin_oracle, lockin_spectrum, max_slope, three_tone_drive  # noqa: E402

__all__ = [
    "__version__",
    "NVMagError",
    "ValidationError",
    "NumericalError",
    "SpinModelParams",
    "DriveConfig",
    "PopulationVector",
    "Spectrum",
    "ModulationConfig",
    "mw_rate",
    "steady_state",
    "fluorescence",
    "cw_spectrum",
    "linewidth",
    "zeeman_shift",
    "thermal_shift",
    "fm_sidebands",
    "lockin_spectrum",
    "lockin_oracle",
    "three_tone_drive",
    "max_slope",
]
