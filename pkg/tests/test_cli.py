import json
import subprocess
import sys

import numpy as np
import pytest

from optimal_wls import acceptance
from optimal_wls.acceptance import CheckResult
from optimal_wls.cli import run
from optimal_wls.sampler import WeightedSample


def test_sample_constant_space_has_unit_weights(tmp_path, capsys):
    assert run(["sample", "--m", "1", "--n", "20", "--seed", "3"]) == 0
    s = WeightedSample.from_csv(capsys.readouterr().out)
    assert s.n == 20
    np.testing.assert_array_equal(s.weights, 1.0)


def test_sample_writes_sidecar(tmp_path):
    out = tmp_path / "s.csv"
    assert run(["sample", "--family", "gaussian", "--d", "2", "--m", "6", "--n", "30",
                "--seed", "9", "--out", str(out)]) == 0
    side = json.loads((tmp_path / "s.csv.provenance.json").read_text())
    assert side["seed"] == 9
    assert side["config"]["family"] == "gaussian"
    assert side["provenance"]["subcommand"] == "sample"
    assert WeightedSample.from_csv(out).d == 2


def test_sidecar_reproduces_byte_identical(tmp_path):
    a = tmp_path / "a.json"
    assert run(["fit", "--family", "chebyshev", "--m", "5", "--n", "80", "--seed", "4",
                "--target", "runge", "--noise-sigma", "0.1", "--out", str(a)]) == 0
    b = tmp_path / "b.json"
    assert run(["fit", "--config", str(a) + ".provenance.json", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    result = json.loads(a.read_text())
    assert len(result["coefficients"]) == 5 and result["errors"]["l2"] > 0


def test_experiment_sidecar_reproduces(tmp_path):
    a = tmp_path / "g.csv"
    assert run(["stability-grid", "--preset", "grid-quick", "--repetitions", "2",
                "--out", str(a)]) == 0
    b = tmp_path / "h.csv"
    assert run(["stability-grid", "--config", str(a) + ".provenance.json",
                "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0].startswith("n,m,repetitions,probability")


def test_table_preset_has_36_rows(tmp_path):
    out = tmp_path / "t.csv"
    assert run(["high-dim-table", "--preset", "paper-table-1", "--repetitions", "1",
                "--n", "300", "--m", "20", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 37
    assert lines[0].split(",")[:3] == ["method", "measure", "d"]


def test_error_study_noise_preset(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"m_values": [3], "n": 60, "sigmas": [0.1, 0.2],
                               "repetitions": 2}))
    assert run(["error-study", "--config", str(cfg)]) == 0
    text = capsys.readouterr().out
    assert text.startswith("sigma,mse")
    assert "# slope=" in text


@pytest.mark.parametrize("argv", [
    ["sample", "--family", "laguerre"],
    ["sample", "--preset", "nope"],
    ["stability-grid", "--config", "/nonexistent.json"],
    ["verify", "--preset", "acceptance-13"],
    ["fit", "--variant", "truncated"],
    ["frobnicate"],
])
def test_config_errors_exit_two(argv, capsys):
    assert run(argv) == 2


def test_unknown_config_key_exits_two(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"repetitons": 5}))
    assert run(["stability-grid", "--config", str(cfg)]) == 2


def test_verify_single_criterion_passes(tmp_path, capsys):
    out = tmp_path / "v.txt"
    assert run(["verify", "--preset", "acceptance-12", "--out", str(out)]) == 0
    assert out.read_text().startswith("[PASS] criterion 12")


def test_verify_reports_failure(monkeypatch, capsys):
    monkeypatch.setattr(acceptance, "run_checks",
                        lambda numbers, quick, echo: [CheckResult(1, "x", False, "forced")])
    assert run(["verify", "--preset", "acceptance-1"]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "optimal_wls", "sample", "--m", "2",
                           "--n", "3", "--seed", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "x_1,w" in proc.stdout
