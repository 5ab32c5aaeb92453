"""Integration tests for the command-line entry point and its artifacts."""

import json

import pytest

from app.cli import main
from app.utils.common import sha256_hex

QUICK_CONFIG = {
    "spin": {"anisotropy_hz": 20000.0, "eta": 0.5, "euler_deg": [30.0, 60.0, 0.0]},
    "rotor": {"spinning_hz": 4000.0},
    "points": 256,
}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "quick.json"
    path.write_text(json.dumps(QUICK_CONFIG, indent=2))
    return path


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


# ============================================================================
# SPECTRUM
# ============================================================================

def test_spectrum_writes_artifacts_and_manifest(config_file, tmp_path):
    out = tmp_path / "run"
    assert main(["spectrum", "--config", str(config_file), "--p", "1", "--m", "0", "--out", str(out)]) == 0
    manifest = _manifest(out)
    assert manifest["command"] == "spectrum"
    names = {a["name"] for a in manifest["artifacts"]}
    assert names == {"fid.csv", "spectrum.csv", "summary.json"}
    for entry in manifest["artifacts"]:
        assert sha256_hex((out / entry["name"]).read_bytes()) == entry["sha256"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["converged"] is True
    assert summary["config"]["points"] == 256
    assert (out / "fid.csv").read_text().splitlines()[0] == "time_s,re,im"
    assert len((out / "spectrum.csv").read_text().splitlines()) == 257


def test_spectrum_reruns_are_byte_identical(config_file, tmp_path):
    for name in ("a", "b"):
        argv = ["spectrum", "--config", str(config_file), "--p", "0", "--m", "1", "--out", str(tmp_path / name)]
        assert main(argv) == 0
    for name in ("fid.csv", "spectrum.csv", "summary.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_unconverged_truncation_exits_with_failure(tmp_path):
    path = tmp_path / "k1.json"
    path.write_text(json.dumps(dict(QUICK_CONFIG, truncation=1)))
    assert main(["spectrum", "--config", str(path), "--p", "1", "--out", str(tmp_path / "run")]) == 1
    summary = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert summary["converged"] is False


def test_spectrum_level_outside_window_is_a_usage_error(tmp_path, capsys):
    path = tmp_path / "k2.json"
    path.write_text(json.dumps(dict(QUICK_CONFIG, truncation=2)))
    assert main(["spectrum", "--config", str(path), "--p", "1", "--m", "9", "--out", str(tmp_path / "run")]) == 2
    assert "error:" in capsys.readouterr().err


# ============================================================================
# CONFIGURATION ERRORS
# ============================================================================

def test_bad_config_names_key_and_exits_two(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "rotor": {"spinning_hz": 4000.0},\n  "spn": {}\n}')
    assert main(["spectrum", "--config", str(path), "--p", "1", "--out", str(tmp_path / "run")]) == 2
    err = capsys.readouterr().err
    assert "spn" in err
    assert "line 3" in err


def test_config_and_preset_together_are_rejected(config_file, tmp_path):
    argv = ["spectrum", "--config", str(config_file), "--preset", "hmb", "--p", "1", "--out", str(tmp_path / "run")]
    assert main(argv) == 2


def test_unknown_option_is_a_usage_error():
    assert main(["spectrum", "--p", "1", "--colour", "blue"]) == 2
    assert main(["spectrum", "--p", "3"]) == 2


def test_negative_seed_and_threads_are_rejected(config_file, tmp_path):
    base = ["spectrum", "--config", str(config_file), "--p", "1", "--out", str(tmp_path / "run")]
    assert main(base + ["--seed", "-1"]) == 2
    assert main(base + ["--threads", "0"]) == 2


# ============================================================================
# PREPARE AND GROVER
# ============================================================================

def test_prepare_gradient_writes_populations(config_file, tmp_path):
    out = tmp_path / "prep"
    assert main(["prepare", "--config", str(config_file), "--p", "0", "--m", "0", "--out", str(out)]) == 0
    rows = (out / "populations.csv").read_text().splitlines()
    assert rows[0] == "p,m,population"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["fidelity"] >= 0.999


def test_grover_single_item(config_file, tmp_path):
    out = tmp_path / "grover"
    assert main(["grover", "--config", str(config_file), "--marked", "3", "--out", str(out)]) == 0
    assert (out / "grover_0_1.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["outcomes"][0]["identified"] == [0, 1]


def test_grover_invalid_marked_item(config_file, tmp_path, capsys):
    assert main(["grover", "--config", str(config_file), "--marked", "1,-1", "--out", str(tmp_path / "g")]) == 2
    assert "working state" in capsys.readouterr().err


# ============================================================================
# VALIDATE
# ============================================================================

@pytest.mark.slow
def test_validate_fast_is_reproducible(tmp_path, capsys):
    for name in ("a", "b"):
        assert main(["validate", "--suite", "fast", "--seed", "3", "--threads", "2", "--out", str(tmp_path / name)]) in (0, 1)
    first = (tmp_path / "a" / "report.json").read_bytes()
    assert first == (tmp_path / "b" / "report.json").read_bytes()
    report = json.loads(first)
    assert report["seed"] == 3
    assert report["checks"][0]["name"] == "parseval"
    assert "parseval" in capsys.readouterr().out
