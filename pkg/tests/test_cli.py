import subprocess
import sys

import pytest

from nvmag import io
from nvmag.cli import main


def test_spectrum_and_lockin(tmp_path, capsys):
    assert main(["spectrum", "--out-dir", str(tmp_path)]) == 0
    assert main(["lockin", "--out-dir", str(tmp_path), "--check-oracle"]) == 0
    out = capsys.readouterr().out
    assert "max relative deviation" in out
    dev = float(out.split(":")[-1])
    assert dev < 1e-3
    meta, cols, data = io.read_csv(tmp_path / "spectrum.csv")
    assert cols == ["freq_mhz", "signal_v"] and data.shape == (801, 2)


@pytest.mark.parametrize("conv", ["intensity", "amplitude"])
def test_cavity_conventions(tmp_path, conv):
    assert main(["cavity", "--out-dir", str(tmp_path), "--convention", conv]) == 0
    meta, _, _ = io.read_csv(tmp_path / "cavity.csv")
    assert meta["convention"] == conv


def test_sensitivity(tmp_path):
    assert main(["sensitivity", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "sensitivity.csv").exists()


def test_trace_then_analyze(tmp_path):
    cfg = tmp_path / "short.ini"
    from nvmag.config import example_config_path

    text = example_config_path().read_text().replace("duration_s = 250.0", "duration_s = 10.0")
    cfg.write_text(text)
    assert main(["trace", "--config", str(cfg), "--out-dir", str(tmp_path), "--seed", "5"]) == 0
    meta, _, _ = io.read_csv(tmp_path / "trace.csv")
    assert meta["seed"] == "5"
    assert main(["analyze", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    meta, cols, _ = io.read_csv(tmp_path / "summary.csv")
    assert cols == ["quantity", "value"]


def test_validation_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[run]\nseed = 1\nunknown = 3\n")
    assert main(["spectrum", "--config", str(bad), "--out-dir", str(tmp_path)]) == 1
    assert main(["bogus"]) == 1
    assert main(["spectrum", "--config", str(tmp_path / "missing.ini")]) == 1
    assert main(["analyze", "--out-dir", str(tmp_path), "--input", str(tmp_path / "none.csv")]) == 1
    assert "error" in capsys.readouterr().err


def test_numerical_exit_code(tmp_path):
    cfg = tmp_path / "singular.ini"
    from nvmag.config import example_config_path

    text = example_config_path().read_text()
    text = text.replace("t1_spin_ms = 5.5", "t1_spin_ms = inf").replace("gamma_p_mhz = 6.0\nomega", "gamma_p_mhz = 0.0\nomega")
    text = text.replace("calibration_gamma_p_mhz = 6.0", "calibration_gamma_p_mhz = 0.0")
    cfg.write_text(text)
    assert main(["spectrum", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2


def test_console_script_help():
    r = subprocess.run([sys.executable, "-m", "nvmag.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for cmd in ("spectrum", "lockin", "cavity", "sweep", "sensitivity", "trace", "analyze", "reproduce"):
        assert cmd in r.stdout


def test_missing_key_names_key(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[spin]\nk_r_mhz = 65.9\nk_isc0_mhz = 11\n")
    assert main(["spectrum", "--config", str(bad), "--out-dir", str(tmp_path)]) == 1
    assert "k_isc1_mhz" in capsys.readouterr().err


@pytest.mark.slow
def test_reproduce_report(tmp_path):
    assert main(["reproduce", "--out-dir", str(tmp_path)]) == 0
    report = (tmp_path / "report.md").read_text()
    for key in ("sensitivity_t_per_rthz", "allan_white_slope", "beat_frequency_hz", "alpha_ab_amplitude_per_mm"):
        assert key in report
    _, _, data = io.read_csv(tmp_path / "reproduce_summary.csv")
    res = {k: v for k, v in data}
    assert 80e-12 <= res["sensitivity_t_per_rthz"] <= 320e-12
    assert res["allan_white_slope"] == pytest.approx(-0.5, abs=0.05)
    assert res["beat_frequency_hz"] == pytest.approx(10.0, abs=0.2)
    _, _, beat = io.read_csv(tmp_path / "beat.csv")
    assert beat.shape[1] == 2
