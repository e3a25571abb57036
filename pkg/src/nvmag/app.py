"""Subcommand pipelines.  Each takes a :class:`RunConfig` and an output
directory, writes its files there and returns a dict of headline numbers."""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import analysis, cavity, config, io, lockin, sensing, spinmodel, trace

ORACLE_POINTS = 201


def _kw(cfg):
    return {"config_hash": cfg.hash(), "seed": cfg.seed}


def _grid(cfg):
    d = cfg.section("drive")
    half = d["span_mhz"] / 2
    return d["omega_0_mhz"] + np.linspace(-half, half, d["n_points"])


def run_spectrum(cfg, out_dir):
    params = config.spin_params(cfg)
    drive = config.drive_config(cfg, params)
    v0 = config.detection_v0(cfg, params)
    spec = spinmodel.cw_spectrum(params, drive, _grid(cfg), v0)
    width = spinmodel.hwhm(params, drive.gamma_p, drive.omega_rabi)
    io.write_table(Path(out_dir) / "spectrum.csv", ["freq_mhz", "signal_v"], [spec.freqs, spec.values],
                   meta={"hwhm_mhz": width, "v0_v": v0}, **_kw(cfg))
    return {"hwhm_mhz": width, "peak_v": float(np.max(spec.values))}


def run_lockin(cfg, out_dir, check_oracle=False):
    params = config.spin_params(cfg)
    drive = config.drive_config(cfg, params)
    mod = config.modulation_config(cfg)
    a = config.gain(cfg)
    v0 = config.detection_v0(cfg, params)
    spec = lockin.lockin_spectrum(params, drive, mod, _grid(cfg), a, v0)
    f_max, s_max = lockin.max_slope(spec)
    out = Path(out_dir)
    io.write_table(out / "lockin.csv", ["freq_mhz", "signal_v"], [spec.freqs, spec.values],
                   meta={"beta": mod.beta, "model": mod.model}, **_kw(cfg))
    res = {"max_slope_v_per_mhz": s_max, "max_slope_freq_mhz": f_max}
    if check_oracle:
        d = cfg.section("drive")
        g = d["omega_0_mhz"] + np.linspace(-d["span_mhz"] / 2, d["span_mhz"] / 2, ORACLE_POINTS)
        fast = lockin.lockin_spectrum(params, drive, mod, g, a, v0)
        ref = lockin.lockin_oracle(params, drive, mod, g, a, v0)
        dev = lockin.relative_deviation(fast, ref)
        io.write_table(out / "lockin_oracle.csv", ["freq_mhz", "expansion_v", "oracle_v"],
                       [g, fast.values, ref.values], meta={"max_relative_deviation": dev}, **_kw(cfg))
        res["oracle_max_relative_deviation"] = dev
    return res


def cavity_rows(cfg, convention=None):
    c = cfg.section("cavity")
    cc = config.cavity_config(cfg)
    conv = convention or c["convention"]
    rho_e = cavity.loss_from_finesse(cc.finesse_empty)
    rho_l = cavity.loss_from_finesse(cc.finesse_loaded)
    f_proj = cavity.finesse_from_reflectivities(cc.r1, cc.r2)
    p_sat = cavity.intracavity_power(c["p_in_saturation_w"], cc.t_in, rho_l)
    p_cav = cavity.intracavity_power(c["p_in_w"], cc.t_in, rho_l)
    gp = cavity.pump_rate(p_cav, c["epsilon_khz_per_mw"])
    budget = cavity.absorption_budget(cc, conv)
    try:
        dens, ppb = cavity.nv_concentration(budget.alpha_ab, c["alpha_background_per_mm"], c["sigma_nv_mm2"])
    except cavity.NegativeConcentrationError:
        dens, ppb = float("nan"), float("nan")
    rows = [
        ("projected_finesse", f_proj, "1"),
        ("rho_empty", rho_e, "1"),
        ("rho_loaded", rho_l, "1"),
        ("t_in", cc.t_in, "1"),
        ("p_cav_at_saturation_input", p_sat, "W"),
        ("p_cav", p_cav, "W"),
        ("gamma_p", gp, "MHz"),
        ("excitation_efficiency", cavity.saturation_efficiency(p_cav, p_sat), "1"),
        ("alpha_total", budget.alpha_total, "1"),
        ("alpha_ab", budget.alpha_ab, "1/mm"),
        ("alpha_surf", budget.alpha_surf, "1"),
        ("alpha_sc", budget.alpha_sc, "1"),
        ("alpha_br", budget.alpha_br, "1/mm"),
        ("nv_density", dens, "1/mm^3"),
        ("nv_ppb", ppb, "ppb"),
        ("nv_count_in_volume", dens * c["excitation_volume_mm3"], "1"),
    ]
    return rows, conv


def run_cavity(cfg, out_dir, convention=None):
    rows, conv = cavity_rows(cfg, convention)
    io.write_csv(Path(out_dir) / "cavity.csv", ["quantity", "value", "unit"], rows,
                 meta={"convention": conv}, **_kw(cfg))
    return {name: value for name, value, _ in rows}


def sweep_axes(cfg):
    s = cfg.sections.get("sweep") or config._apply_schema("sweep", {})
    om = np.geomspace(s["omega_min_mhz"], s["omega_max_mhz"], s["n_omega"])
    gp = np.geomspace(s["gamma_p_min_mhz"], s["gamma_p_max_mhz"], s["n_gamma_p"])
    return om, gp


def run_sweep(cfg, out_dir, name="sweep"):
    params = config.spin_params(cfg)
    mod = config.modulation_config(cfg)
    v0 = config.detection_v0(cfg, params)
    om, gp = sweep_axes(cfg)
    tones = None if cfg.section("drive")["tone_mode"] == "three" else (0.0,)
    surf = sensing.sweep_slope(params, om, gp, mod, config.gain(cfg), v0, tones)
    out = Path(out_dir)
    cols = ["gamma_p_mhz"] + [f"omega_{o:.6g}_mhz" for o in surf.omega_axis]
    rows = [[g, *row] for g, row in zip(surf.gamma_p_axis, surf.slopes)]
    io.write_csv(out / f"{name}.csv", cols, rows, meta={"quantity": "max lock-in slope V/MHz"}, **_kw(cfg))
    io.heatmap_svg(out / f"{name}.svg", surf.omega_axis, surf.gamma_p_axis, np.log10(surf.slopes),
                   x_label="Omega (MHz)", y_label="Gamma_p (MHz)", title="log10 max slope (V/MHz)")
    g_best, o_best, s_best = surf.best()
    return {"surface": surf, "best_gamma_p_mhz": g_best, "best_omega_mhz": o_best, "best_slope_v_per_mhz": s_best}


def sensitivity_report(cfg):
    params = config.spin_params(cfg)
    drive = config.drive_config(cfg, params)
    mod = config.modulation_config(cfg)
    a = config.gain(cfg)
    v0 = config.detection_v0(cfg, params)
    d = cfg.section("detection")
    rate = sensing.photon_rate(d["n_emitters"], d["per_emitter_rate_hz"], d["collection_efficiency"])
    shot = sensing.shot_noise(rate, d["quantum_efficiency"], d["load_ohm"])
    budget = sensing.noise_budget(shot, d["lockin_input_noise_v_per_rthz"], d["detector_load_noise_v_per_rthz"],
                                  d["noise_mode"])
    slope = sensing.resonance_slope(params, drive.gamma_p, drive.omega_rabi, mod, a, v0, drive.tones, drive.omega_0)
    db = sensing.sensitivity(slope, budget.total, a, params.gamma_e)
    return {
        "gamma_p_mhz": drive.gamma_p,
        "omega_rabi_mhz": drive.omega_rabi,
        "v0_v": v0,
        "shot_noise_v_per_rthz": shot,
        "lockin_input_noise_v_per_rthz": budget.lockin_input,
        "detector_load_noise_v_per_rthz": budget.detector_load,
        "noise_total_v_per_rthz": budget.total,
        "max_slope_v_per_mhz": slope,
        "sensitivity_t_per_rthz": db,
    }


def run_sensitivity(cfg, out_dir):
    rep = sensitivity_report(cfg)
    io.write_csv(Path(out_dir) / "sensitivity.csv", ["quantity", "value"], list(rep.items()),
                 meta={"noise_mode": cfg.section("detection")["noise_mode"]}, **_kw(cfg))
    return rep


def operating_point(cfg, params=None, *, slope=None):
    params = params or config.spin_params(cfg)
    s = cfg.section("sensor")
    if slope is None:
        mod = config.modulation_config(cfg)
        v0 = config.detection_v0(cfg, params)
        slope = sensing.resonance_slope(params, s["gamma_p_mhz"], s["omega_rabi_mhz"], mod, config.gain(cfg), v0)
    width = spinmodel.hwhm(params, s["gamma_p_mhz"], s["omega_rabi_mhz"])
    return config._build(trace.SensorOperatingPoint, slope, params.gamma_e, s["corner_freq_hz"],
                         s["sample_rate_hz"], s["electronic_noise_v_per_rthz"], cfg.seed, width)


def run_trace(cfg, out_dir, name="trace", scenario=None, slope=None, duration=None):
    params = config.spin_params(cfg)
    op = operating_point(cfg, params, slope=slope)
    sc = scenario or config.field_scenario(cfg)
    dur = duration or cfg.section("sensor")["duration_s"]
    tr = trace.synthesize_trace(sc, op, dur)
    io.write_trace(Path(out_dir) / f"{name}.csv", tr, config_hash=cfg.hash(),
                   meta={"slope_v_per_mhz": op.slope, "gamma_e_mhz_per_mt": op.gamma_e})
    return {"trace": tr, "op_point": op}


def analysis_settings(cfg):
    return cfg.sections.get("analysis") or config._apply_schema("analysis", {})


def run_analyze(cfg, out_dir, trace_in, *, slope=None, gamma_e=None, prefix=""):
    """ASD, Allan deviation and summary of a trace (converted to tesla when possible)."""
    tr = trace_in if isinstance(trace_in, trace.TimeTrace) else io.read_trace(trace_in)
    if tr.units == "volts":
        slope = slope if slope is not None else float(tr.meta.get("slope_v_per_mhz", "nan"))
        gamma_e = gamma_e if gamma_e is not None else float(tr.meta.get("gamma_e_mhz_per_mt", "28"))
        if math.isfinite(slope) and slope > 0:
            tr = trace.volts_to_tesla(tr, slope, gamma_e)
    a = analysis_settings(cfg)
    seg = min(a["segment_len"], tr.samples.size)
    spec = analysis.psd(tr, seg, a["overlap_fraction"])
    win = a["savgol_window"]
    smooth = analysis.savitzky_golay(spec.asd, win, a["savgol_order"]) if spec.asd.size >= win else spec.asd
    curve = analysis.allan_deviation(tr, estimator=a["allan_estimator"])
    tau, sig = curve.minimum()
    hi = min(159.0, tr.sample_rate / 2)
    summary = {
        "units": tr.units,
        "asd_median_5_159_hz": spec.median(5.0, hi),
        "asd_median_0p1_159_hz": spec.median(0.1, hi),
        "allan_min_tau_s": tau,
        "allan_min_sigma": sig,
        "extracted_sensitivity_per_rthz": analysis.extract_sensitivity(sig, tau),
    }
    out = Path(out_dir)
    kw = {"config_hash": cfg.hash(), "seed": tr.seed if tr.seed is not None else "none"}
    io.write_table(out / f"{prefix}asd.csv", ["freq_hz", "asd", "asd_smoothed"], [spec.freqs, spec.asd, smooth],
                   meta={"units": f"{tr.units}/rtHz", "window": analysis.WINDOW, "segments": spec.n_averages}, **kw)
    io.write_table(out / f"{prefix}allan.csv", ["tau_s", "sigma"], [curve.taus, curve.sigmas],
                   meta={"units": tr.units, "estimator": curve.estimator}, **kw)
    io.write_csv(out / f"{prefix}summary.csv", ["quantity", "value"], list(summary.items()), **kw)
    return {"psd": spec, "allan": curve, "summary": summary}
