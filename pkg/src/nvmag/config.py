"""Run configuration: INI files (or a JSON mirror) with unit-suffixed keys.

Every section is optional as a whole, but a section that is present must
contain all of its required keys, and unknown sections or keys are rejected.
Subcommands ask for the sections they need through :meth:`RunConfig.section`.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, NVMagError

REQUIRED = object()


def _float(v):
    return float(v)


def _int(v):
    if isinstance(v, float) and not v.is_integer():
        raise ValueError(f"expected an integer, got {v}")
    return int(v)


def _floats(v):
    if isinstance(v, (list, tuple)):
        return tuple(float(x) for x in v)
    v = str(v).strip()
    return tuple(float(x) for x in v.split(",") if x.strip()) if v else ()


def _tones(v):
    """``freq:amp:phase`` triples separated by commas."""
    if isinstance(v, (list, tuple)):
        out = [tuple(float(y) for y in t) for t in v]
    else:
        v = str(v).strip()
        out = [tuple(float(y) for y in item.split(":")) for item in v.split(",") if item.strip()] if v else []
    for t in out:
        if len(t) != 3:
            raise ValueError("each tone needs frequency:amplitude:phase")
    return tuple(out)


def _choice(*options):
    def conv(v):
        v = str(v).strip()
        if v not in options:
            raise ValueError(f"expected one of {options}, got {v!r}")
        return v

    return conv


def _opt_int(v):
    if v is None or str(v).strip().lower() in ("", "auto", "none"):
        return None
    return _int(float(v))


SCHEMA = {
    "run": {
        "run_id": (str, "run"),
        "seed": (_int, 0),
    },
    "spin": {
        "k_r_mhz": (_float, REQUIRED),
        "k_isc0_mhz": (_float, REQUIRED),
        "k_isc1_mhz": (_float, REQUIRED),
        "k_s0_mhz": (_float, REQUIRED),
        "k_s1_mhz": (_float, REQUIRED),
        "t1_spin_ms": (_float, REQUIRED),
        "t2_star_us": (_float, REQUIRED),
        "a_par_mhz": (_float, 2.16),
        "gamma_e_mhz_per_mt": (_float, 28.0),
    },
    "drive": {
        "gamma_p_mhz": (_float, REQUIRED),
        "omega_rabi_mhz": (_float, REQUIRED),
        "omega_c_mhz": (_float, 0.0),
        "omega_0_mhz": (_float, 0.0),
        "tone_mode": (_choice("single", "three"), "three"),
        "span_mhz": (_float, 8.0),
        "n_points": (_int, 801),
    },
    "modulation": {
        "nu_khz": (_float, 30.0),
        "m_depth_mhz": (_float, 0.5),
        "n_max": (_opt_int, None),
        "model": (_choice("pairs", "sideband"), "pairs"),
        "truncation": (_choice("half", "full"), "half"),
        "gain_a": (_float, 5e4),
    },
    "detection": {
        "n_emitters": (_float, REQUIRED),
        "collection_efficiency": (_float, REQUIRED),
        "quantum_efficiency": (_float, REQUIRED),
        "load_ohm": (_float, REQUIRED),
        "per_emitter_rate_hz": (_float, REQUIRED),
        "calibration_gamma_p_mhz": (_float, REQUIRED),
        "lockin_input_noise_v_per_rthz": (_float, 0.0),
        "detector_load_noise_v_per_rthz": (_float, 0.0),
        "noise_mode": (_choice("linear", "quadrature"), "linear"),
    },
    "cavity": {
        "r1": (_float, REQUIRED),
        "r2": (_float, REQUIRED),
        "finesse_empty": (_float, REQUIRED),
        "finesse_loaded": (_float, REQUIRED),
        "path_len_mm": (_float, REQUIRED),
        "reflection_fraction": (_float, 0.0),
        "s_pol_fraction": (_float, 0.8),
        "p_in_w": (_float, 0.4),
        "p_in_saturation_w": (_float, 0.87),
        "epsilon_khz_per_mw": (_float, 0.3),
        "convention": (_choice("intensity", "amplitude"), "intensity"),
        "alpha_background_per_mm": (_float, 0.03),
        "sigma_nv_mm2": (_float, 3.1e-15),
        "excitation_volume_mm3": (_float, 3.5e-2),
    },
    "sweep": {
        "omega_min_mhz": (_float, 0.1),
        "omega_max_mhz": (_float, 10.0),
        "gamma_p_min_mhz": (_float, 0.05),
        "gamma_p_max_mhz": (_float, 10.0),
        "n_omega": (_int, 21),
        "n_gamma_p": (_int, 21),
    },
    "field": {
        "tones": (_tones, ()),
        "hum_fundamental_hz": (_float, 50.0),
        "hum_amplitudes_t": (_floats, ()),
        "white_noise_density_t_per_rthz": (_float, 0.0),
        "drift_rate_t_per_rts": (_float, 0.0),
        "temp_drift_k_per_s": (_float, 0.0),
    },
    "sensor": {
        "gamma_p_mhz": (_float, REQUIRED),
        "omega_rabi_mhz": (_float, REQUIRED),
        "corner_freq_hz": (_float, 159.0),
        "sample_rate_hz": (_float, 2000.0),
        "electronic_noise_v_per_rthz": (_float, 0.0),
        "duration_s": (_float, 250.0),
    },
    "beat": {
        "tone_freq_hz": (_float, 60.0),
        "tone_amplitude_t": (_float, 2e-9),
        "duration_s": (_float, 20.0),
    },
    "analysis": {
        "segment_len": (_int, 16384),
        "overlap_fraction": (_float, 0.5),
        "savgol_window": (_int, 11),
        "savgol_order": (_int, 3),
        "allan_estimator": (_choice("overlapping", "non-overlapping"), "overlapping"),
    },
}


@dataclass(frozen=True)
class RunConfig:
    sections: dict
    source: str = "<memory>"

    def section(self, name):
        if name not in self.sections:
            raise ConfigError(f"missing section [{name}] in {self.source}")
        return self.sections[name]

    def has(self, name):
        return name in self.sections

    @property
    def seed(self):
        return self.sections.get("run", {}).get("seed", 0)

    def with_seed(self, seed):
        sections = {k: dict(v) for k, v in self.sections.items()}
        run = sections.setdefault("run", _apply_schema("run", {}))
        run["seed"] = _coerce("run", "seed", seed)
        return RunConfig(sections, self.source)

    def canonical(self):
        return json.dumps(self.sections, sort_keys=True, separators=(",", ":"), default=list)

    def hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def _coerce(section, key, value):
    conv, _ = SCHEMA[section][key]
    try:
        return conv(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None


def _apply_schema(section, raw):
    spec = SCHEMA[section]
    unknown = sorted(set(raw) - set(spec))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
    out = {}
    for key, (_, default) in spec.items():
        if key in raw:
            out[key] = _coerce(section, key, raw[key])
        elif default is REQUIRED:
            raise ConfigError(f"missing required key '{key}' in [{section}]")
        else:
            out[key] = default
    return out


def from_mapping(data, source="<memory>") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping of sections")
    unknown = sorted(set(data) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    sections = {}
    for name in SCHEMA:
        if name in data:
            if not isinstance(data[name], dict):
                raise ConfigError(f"section [{name}] must be a mapping")
            sections[name] = _apply_schema(name, data[name])
    if "run" not in sections:
        sections["run"] = _apply_schema("run", {})
    return RunConfig(sections, source)


def load_config(path) -> RunConfig:
    """Read an INI file, or a JSON mirror when the suffix is ``.json``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from None
        return from_mapping(data, str(path))
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"invalid INI in {path}: {exc}") from None
    data = {s: dict(parser.items(s)) for s in parser.sections()}
    return from_mapping(data, str(path))


def example_config_path() -> Path:
    return Path(__file__).parent / "data" / "example.ini"


# builders ---------------------------------------------------------------

def spin_params(cfg: RunConfig):
    from .spinmodel import SpinModelParams

    s = cfg.section("spin")
    return _build(SpinModelParams, s["k_r_mhz"], s["k_isc0_mhz"], s["k_isc1_mhz"], s["k_s0_mhz"],
                  s["k_s1_mhz"], s["t1_spin_ms"], s["t2_star_us"], s["a_par_mhz"], s["gamma_e_mhz_per_mt"])


def drive_config(cfg: RunConfig, params=None, *, gamma_p=None, omega_rabi=None):
    from .lockin import three_tone_drive
    from .spinmodel import DriveConfig

    d = cfg.section("drive")
    params = params or spin_params(cfg)
    tones = three_tone_drive(d["omega_c_mhz"], params.a_par) if d["tone_mode"] == "three" else (0.0,)
    return _build(DriveConfig, d["gamma_p_mhz"] if gamma_p is None else gamma_p,
                  d["omega_rabi_mhz"] if omega_rabi is None else omega_rabi,
                  d["omega_c_mhz"], d["omega_0_mhz"], tones)


def modulation_config(cfg: RunConfig):
    from .lockin import ModulationConfig

    m = cfg.sections.get("modulation") or _apply_schema("modulation", {})
    return _build(ModulationConfig, m["nu_khz"], m["m_depth_mhz"], m["n_max"], m["model"], m["truncation"])


def gain(cfg: RunConfig):
    m = cfg.sections.get("modulation") or _apply_schema("modulation", {})
    return m["gain_a"]


def detection_v0(cfg: RunConfig, params=None):
    """Detection scale (V per unit excited population) from the calibrated photon budget."""
    from .sensing import dc_voltage, detection_scale, photon_rate

    d = cfg.section("detection")
    params = params or spin_params(cfg)
    rate = photon_rate(d["n_emitters"], d["per_emitter_rate_hz"], d["collection_efficiency"])
    v_dc = dc_voltage(rate, d["quantum_efficiency"], d["load_ohm"])
    return detection_scale(params, d["calibration_gamma_p_mhz"], v_dc)


def cavity_config(cfg: RunConfig):
    from .cavity import CavityConfig

    c = cfg.section("cavity")
    return _build(CavityConfig, c["r1"], c["r2"], c["finesse_empty"], c["finesse_loaded"],
                  c["path_len_mm"], c["reflection_fraction"], c["s_pol_fraction"])


def field_scenario(cfg: RunConfig):
    from .trace import FieldScenario

    f = cfg.sections.get("field") or _apply_schema("field", {})
    return _build(FieldScenario, f["tones"], f["hum_fundamental_hz"], f["hum_amplitudes_t"],
                  f["white_noise_density_t_per_rthz"], f["drift_rate_t_per_rts"], f["temp_drift_k_per_s"])


def _build(cls, *args):
    try:
        return cls(*args)
    except NVMagError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {cls.__name__}: {exc}") from None
