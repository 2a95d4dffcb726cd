import json
import subprocess
import sys

import pytest

from conic_ch.cli import main
from conic_ch.config import ConfigError, RunConfig, parse_config


def write_cfg(path, text):
    path.write_text(text)
    return str(path)


def test_defaults_filled(tmp_path):
    cfg = parse_config(write_cfg(tmp_path / "c.cfg", "# nothing\n"))
    assert cfg == RunConfig()
    assert [(i.s, i.gamma, i.p) for i in cfg.norm_indices()] == [(0, -0.5, 2), (2, 1.5, 2)]


def test_gamma_outside_window():
    with pytest.raises(ConfigError) as exc:
        parse_config(overrides={"gamma": "0.5"})
    assert any("(-1.0, 0.0)" in p for p in exc.value.problems)


def test_gamma_window_follows_alpha():
    assert parse_config(overrides={"gamma": "0.2", "alpha0": "0.8", "alphaL": "0.8"}).gamma == 0.2


def test_all_violations_collected():
    with pytest.raises(ConfigError) as exc:
        parse_config(overrides={"n_theta": "48", "dt": "-1", "grading": "chebyshev"})
    text = " ".join(exc.value.problems)
    assert "power of two" in text and "dt must be > 0" in text and "grading" in text
    assert len(exc.value.problems) == 3


def test_unknown_and_unparsable_keys(tmp_path):
    with pytest.raises(ConfigError) as exc:
        parse_config(write_cfg(tmp_path / "c.cfg", "foo = 1\nn_radial = many\nnonsense\n"))
    assert exc.value.problems == ["line 3: expected 'key = value'"]
    with pytest.raises(ConfigError) as exc:
        parse_config(write_cfg(tmp_path / "d.cfg", "foo = 1\nn_radial = many\n"))
    assert len(exc.value.problems) == 2
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.cfg")


def test_flag_wins(tmp_path):
    path = write_cfg(tmp_path / "c.cfg", "dt = 0.01\ninitial.kind = mode_bump\nnorms = 1,0.5,2\n")
    cfg = parse_config(path, {"dt": "0.002", "initial.seed": None})
    assert cfg.dt == 0.002 and cfg.initial_kind == "mode_bump"
    assert cfg.norm_requests()[0].label == "norm_1_0.5_2"


def test_resolved_echo_round_trips(tmp_path):
    cfg = parse_config(overrides={"alpha0": "0.8", "fit_modes": "1 2"})
    again = parse_config(write_cfg(tmp_path / "echo.cfg", cfg.to_text()))
    assert again.to_text() == cfg.to_text()


def test_indicial_json(capsys):
    assert main(["indicial", "--n", "1", "--alpha", "1", "--gamma", "-0.5"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["gamma_window"] == [-1.0, 0.0]
    assert rep["delta0_sup"] == 0.5
    assert sorted(t["rho"] for t in rep["terms"]) == [-2.0, -1.0]


def test_indicial_invalid(capsys):
    assert main(["indicial", "--n", "1", "--alpha", "1", "--gamma", "0.5"]) == 1
    assert "outside window" in capsys.readouterr().err
    assert main(["indicial", "--gamma"]) == 1


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == 64
    assert "usage" in capsys.readouterr().err
    assert main([]) == 64


def test_verify(capsys):
    assert main(["verify"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"] and len(rep["checks"]) == 8


def test_simulate_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    args = ["simulate", "--out_dir", str(out), "--n_radial", "24", "--n_theta", "8",
            "--t_end", "0.01", "--output_every", "5", "--snapshot_every", "10"]
    assert main(args) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["config.resolved", "series.csv", "snapshots", "tip_fits.csv"]
    assert sorted(p.name for p in (out / "snapshots").iterdir()) == [
        "snapshot_0000000.bin", "snapshot_0000000.json", "snapshot_0000010.bin", "snapshot_0000010.json"]
    assert "n_radial = 24" in (out / "config.resolved").read_text()
    rows = (out / "series.csv").read_text().splitlines()
    assert rows[0] == "t,energy,mass,grad_sq,l2_sq,max_abs,norm_0_-0.5_2,norm_2_1.5_2"
    assert len(rows) == 4


def test_simulate_invalid(tmp_path, capsys):
    assert main(["simulate", "--out_dir", str(tmp_path), "--n_theta", "48"]) == 1
    assert not (tmp_path / "series.csv").exists()


def test_simulate_runtime_failure(tmp_path, capsys):
    args = ["simulate", "--out_dir", str(tmp_path), "--alpha0", "0.8", "--alphaL", "0.8",
            "--length", "6", "--dt", "1", "--t_end", "200", "--stabilization", "0",
            "--initial.kind", "pure_phase_perturbed", "--initial.amplitude", "0.5", "--gamma", "-0.5"]
    assert main(args) == 2
    assert "step" in capsys.readouterr().err


def test_fit_asymptotics_csv(capsys):
    assert main(["fit-asymptotics", "--n_radial", "32", "--n_theta", "8", "--t_end", "0.02",
                 "--output_every", "10", "--initial-kind", "mode_bump"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,m,rho_hat,r2"
    assert len(lines) == 4
    assert float(lines[1].split(",")[2]) == pytest.approx(1.0, abs=1e-2)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "conic_ch", "nope"], capture_output=True, text=True)
    assert r.returncode == 64
