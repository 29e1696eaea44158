import json

import numpy as np
import pandas as pd
import pytest

from otto_engine.common.engine_instance.engine_services.cache_manager import cell_cache as cache_module
from otto_engine.common.engine_instance.local_shared_model.data_model.config_model import RunConfig
from otto_engine.common.engine_instance.local_shared_model.error_model import ConfigError
from optomech_otto.scripts.cli import main, parse_formats
from optomech_otto.scripts.sweep import run_sweep

SYSTEM = """
[system]
2kappa_c = 0.1
2gamma = 1e-4
g_coupling = {g}
n_th = 300
"""

FEEDBACK = """
[feedback]
{knob}
eta_d = {eta_d}
"""

SCHEDULE = """
[schedule]
delta_i = -3.0
delta_f = -0.3
tau1 = {tau1}
tau2 = "3/kappa_fb"
tau4 = "20/gamma"
"""

SWEEP = """
[sweep]
method = "node-estimate"

[[sweep.axes]]
name = "delta_f"
start = -0.6
stop = -0.2
points = 2

[[sweep.axes]]
name = "g_coupling"
start = 0.02
stop = 0.08
points = 2
"""


def _write(tmp_path, *blocks, name="run.toml"):
    path = tmp_path / name
    path.write_text("\n".join(blocks), encoding="utf-8")
    return str(path)


def _config(tmp_path, g=0.05, knob="kappa_fb = 0.0075", eta_d=0.6, tau1=35, extra=""):
    return _write(tmp_path, SYSTEM.format(g=g), FEEDBACK.format(knob=knob, eta_d=eta_d),
                  SCHEDULE.format(tau1=tau1), extra)


def _run(*argv):
    return main(list(argv))


def test_steady_without_coupling_is_thermal(tmp_path):
    config = _write(tmp_path, SYSTEM.format(g=0.0), FEEDBACK.format(knob="gain = 0.0", eta_d=0.6),
                    "[point]\ndelta_p = -1.0\n")
    out = tmp_path / "out"
    assert _run("steady", "--config", config, "--out", str(out), "--format", "csv,json,matrix") == 0

    summary = json.loads((out / "steady.json").read_text())
    assert summary["schema_version"] == 1
    assert summary["command"] == "steady"
    assert summary["populations"]["n_phonon"] == pytest.approx(300.0, rel=1e-10)
    assert summary["populations"]["n_photon"] == pytest.approx(0.0, abs=1e-10)
    assert summary["stability"]["stable"] is True

    frame = pd.read_csv(out / "steady_state.csv")
    assert len(frame) == 16
    assert list(frame.columns) == ["row", "col", "real", "imag"]
    assert (out / "steady_state_real.dat").exists()
    assert np.loadtxt(out / "steady_state_real.dat").shape == (4, 4)


def test_invalid_detection_efficiency_is_a_configuration_error(tmp_path, capsys):
    config = _config(tmp_path, eta_d=1.5)
    assert _run("steady", "--config", config, "--out", str(tmp_path / "out")) == 2
    assert "feedback.eta_d" in capsys.readouterr().err


def test_zero_ramp_duration_is_rejected(tmp_path):
    config = _config(tmp_path, tau1=0)
    assert _run("check", "--config", config, "--out", str(tmp_path / "out")) == 2


def test_missing_run_file(tmp_path):
    assert _run("check", "--config", str(tmp_path / "nope.toml"), "--out", str(tmp_path / "out")) == 2


def test_runaway_gain_is_a_configuration_error(tmp_path, capsys):
    config = _config(tmp_path, knob="gain = 3.0")
    assert _run("check", "--config", config, "--out", str(tmp_path / "out")) == 2
    assert "unstable" in capsys.readouterr().err


def test_unknown_format_is_a_configuration_error(tmp_path):
    config = _config(tmp_path)
    assert _run("check", "--config", config, "--out", str(tmp_path / "out"), "--format", "xlsx") == 2
    with pytest.raises(ConfigError):
        parse_formats("csv,yaml")
    assert parse_formats("json, matrix") == ("json", "matrix")


def test_unstable_point_exits_with_runtime_error(tmp_path, capsys):
    config = _config(tmp_path, extra="[point]\ndelta_p = -0.01\n")
    assert _run("steady", "--config", config, "--out", str(tmp_path / "out")) == 1
    assert "Unstable" in capsys.readouterr().err


def test_check_reports_hierarchy_and_ideal_efficiency(tmp_path):
    config = _config(tmp_path, g=0.2)
    out = tmp_path / "out"
    assert _run("check", "--config", config, "--out", str(out), "--format", "json") == 0
    summary = json.loads((out / "check.json").read_text())
    assert summary["valid"] is True
    assert summary["stability"]["delta_f"]["stable"] is True
    assert summary["ideal_efficiency"] == pytest.approx(0.7)
    assert summary["hierarchy"]["occupancy_ok"] is True
    assert summary["hierarchy"]["margins"]["tau1*G"] == pytest.approx(7.0)
    assert summary["schedule"]["tau"][2] == pytest.approx(35.0)


def test_polariton_scan_rows(tmp_path):
    config = _config(tmp_path, extra="[point]\ndelta_p = -2.0\nscan_start = -3.0\nscan_stop = -0.01\nscan_points = 20\n")
    out = tmp_path / "out"
    assert _run("polariton", "--config", config, "--out", str(out), "--format", "csv,json,matrix") == 0
    frame = pd.read_csv(out / "polariton_spectrum.csv")
    assert len(frame) == 20
    assert frame["hamiltonian_stable"].iloc[0]
    assert not frame["hamiltonian_stable"].iloc[-1]
    assert np.isnan(frame["omega_b"].iloc[-1])
    summary = json.loads((out / "polariton.json").read_text())
    assert summary["basis"]["available"] is True
    assert summary["boundary_detuning"] == pytest.approx(-0.047793, abs=1e-6)
    assert (out / "polariton_transform_real.dat").exists()


def test_sweep_csv_round_trips_exactly(tmp_path):
    config = _config(tmp_path, extra=SWEEP)
    out = tmp_path / "out"
    assert _run("sweep", "--config", config, "--out", str(out), "--threads", "1", "--format", "csv,json,matrix") == 0

    frame = pd.read_csv(out / "sweep.csv", float_precision="round_trip")
    assert len(frame) == 4
    assert {"delta_f", "g_coupling", "efficiency", "status"} <= set(frame.columns)

    reference = run_sweep(RunConfig.load(config).sweep_spec(), workers=1, progress=False)
    expected = [cell.efficiency for cell in reference.cells]
    assert frame["efficiency"].tolist() == expected

    grid = np.loadtxt(out / "sweep_efficiency.dat")
    assert grid.shape == (2, 2)
    summary = json.loads((out / "sweep.json").read_text())
    assert summary["counts"]["ok"] == 4
    assert summary["best_efficiency"] is not None


def test_commands_need_their_blocks(tmp_path):
    config = _write(tmp_path, SYSTEM.format(g=0.05), FEEDBACK.format(knob="kappa_fb = 0.0075", eta_d=0.6))
    assert _run("sweep", "--config", config, "--out", str(tmp_path / "out")) == 2
    assert _run("cycle", "--config", config, "--out", str(tmp_path / "out")) == 2


@pytest.mark.slow
def test_cycle_writes_trajectory_and_ledger(tmp_path):
    config = _config(tmp_path, g=0.2, extra="[output]\nsamples_per_stroke = 10\n")
    out = tmp_path / "out"
    assert _run("cycle", "--config", config, "--out", str(out), "--compare-off") == 0

    trajectory = pd.read_csv(out / "trajectory.csv")
    assert len(trajectory) == 10 + 3 * 9
    assert list(trajectory.columns)[:2] == ["t", "delta_p"]
    assert (out / "trajectory_feedback_off.csv").exists()
    assert len(pd.read_csv(out / "strokes.csv")) == 4

    summary = json.loads((out / "cycle.json").read_text())
    assert summary["ledger"]["functional"] is True
    assert summary["ledger"]["work_total"] < 0
    assert summary["node_estimate"]["method"] == "node-estimate"
    assert summary["feedback_off"]["feedback_helps"] is True


def test_sweep_without_redis_builds_no_cache(tmp_path, monkeypatch):
    def _refuse(*args, **kwargs):
        raise AssertionError("cache built without OTTO_REDIS_URL")

    monkeypatch.setattr(cache_module, "cell_cache", _refuse)
    config = _config(tmp_path, extra=SWEEP)
    assert _run("sweep", "--config", config, "--out", str(tmp_path / "out"), "--threads", "1") == 0
