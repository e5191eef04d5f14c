"""End-to-end tests of the command-line interface, run in process."""
import math

import pytest
import yaml

from upstage import cli


def _read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0], [line.split(",") for line in lines[1:]]


def test_optimize_writes_summary_and_trajectory(tmp_path):
    out = tmp_path / "run"
    assert cli.main(["optimize", "--out", str(out)]) == 0

    summary = yaml.safe_load((out / "summary.yaml").read_text())
    assert summary["command"] == "optimize"
    assert summary["status"] == "converged"
    assert abs(summary["thrust_kn"] - 131.296) < 0.5
    assert abs(summary["burn_time_s"] - 839.19) < 2.0
    assert abs(summary["final_mass_kg"] - 7898.4) < 20.0
    assert abs(summary["residuals_m"]["apogee"]) < 10.0
    assert abs(summary["residuals_m"]["perigee"]) < 10.0
    assert abs(summary["achieved_orbit_km"]["apogee"] - 36000.0) < 0.1
    assert abs(summary["achieved_orbit_km"]["perigee"] - 250.0) < 0.1
    p_r = summary["costates_per_km"]["p_r"]
    assert abs(p_r[0] - (-2.5354)) < 0.013
    assert abs(p_r[1] - 0.8491) < 0.005

    header, rows = _read_csv(out / "trajectory.csv")
    assert header == ("time_s,x_km,y_km,vx_m_s,vy_m_s,mass_kg,altitude_km,"
                      "speed_m_s,longitude_deg,flight_path_deg,pitch_deg,"
                      "apogee_km,perigee_km")
    assert float(rows[0][0]) == 0.0
    assert abs(float(rows[-1][0]) - summary["burn_time_s"]) < 1e-9
    assert abs(float(rows[0][10]) - 7.5153) < 0.002
    assert abs(float(rows[-1][5]) - summary["final_mass_kg"]) < 1e-6


def test_optimize_guess_only(tmp_path):
    out = tmp_path / "run"
    assert cli.main(["optimize", "--guess-only", "--out", str(out)]) == 0
    summary = yaml.safe_load((out / "summary.yaml").read_text())
    assert abs(summary["thrust_kn"] - 126.038) < 0.01
    assert abs(summary["burn_time_s"] - 856.0) < 0.2
    assert abs(summary["final_mass_guess_kg"] - 8568.2) < 0.2
    assert summary["v_target_m_s"] > summary["v_initial_m_s"]
    assert abs(summary["propagated_orbit_km"]["apogee"] - 24026.2) < 50.0
    assert abs(summary["propagated_orbit_km"]["perigee"] - 188.4) < 5.0


def test_shoot_rejects_nonpositive_thrust(tmp_path, capsys):
    assert cli.main(["shoot", "--thrust-kn", "0",
                     "--out", str(tmp_path)]) == 1
    assert "must be positive" in capsys.readouterr().err


def test_shoot_off_optimal_level(tmp_path):
    out = tmp_path / "run"
    assert cli.main(["shoot", "--thrust-kn", "140", "--out", str(out)]) == 0
    summary = yaml.safe_load((out / "summary.yaml").read_text())
    assert summary["thrust_kn"] == 140.0
    assert abs(summary["seeded_from_kn"] - 131.296) < 0.5
    assert summary["scaled_residual_norm"] < 1e-6
    assert summary["final_mass_kg"] < 7898.5


def test_sweep_small_grid(tmp_path):
    cfg = tmp_path / "mission.yaml"
    cfg.write_text("sweep:\n  t_min_kn: 120.0\n  t_max_kn: 140.0\n"
                   "  points: 5\n")
    out = tmp_path / "run"
    assert cli.main(["sweep", "--config", str(cfg),
                     "--out", str(out)]) == 0
    header, rows = _read_csv(out / "sweep.csv")
    assert header == "T_kn,converged,m_f,dv_loss,H0_t0,T_HT_t0,p_rx,p_ry,p_vx,p_vy,p_m"
    assert [row[0] for row in rows] == ["120", "125", "130", "135", "140"]
    assert all(row[1] == "true" for row in rows)
    masses = [float(row[2]) for row in rows]
    assert max(masses) == pytest.approx(7898.4, abs=20.0)


def test_pitch_curves_symmetry(tmp_path):
    out = tmp_path / "run"
    assert cli.main(["pitch-curves", "--ratios", "1.0", "--samples", "21",
                     "--out", str(out)]) == 0
    header, rows = _read_csv(out / "pitch_curves.csv")
    assert header == "ratio_vc_v,theta_deg,gamma_plus_deg,gamma_minus_deg"
    assert len(rows) == 21
    theta = [float(row[1]) for row in rows]
    plus = [float(row[2]) for row in rows]
    minus = [float(row[3]) for row in rows]
    assert all(b > a for a, b in zip(plus, plus[1:]))
    for k in range(21):
        assert abs(plus[k] + plus[20 - k]) < 1e-9
        assert abs(minus[k] + plus[k] - 2.0 * theta[k]) < 1e-9


@pytest.mark.parametrize("argv", [
    ["pitch-curves", "--ratios", "abc"],
    ["pitch-curves", "--ratios", "-1.0"],
    ["pitch-curves", "--samples", "1"],
])
def test_pitch_curves_validation(tmp_path, argv):
    assert cli.main(argv + ["--out", str(tmp_path)]) == 1


def test_config_dir_env_resolution(tmp_path, monkeypatch):
    (tmp_path / "mission.yaml").write_text(
        "vehicle:\n  initial_mass_kg: 40000.0\n")
    monkeypatch.setenv("UPSTAGE_CONFIG_DIR", str(tmp_path))
    out = tmp_path / "run"
    assert cli.main(["optimize", "--guess-only", "--config", "mission",
                     "--out", str(out)]) == 0


def test_unknown_config_key_is_validation_error(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("vehicle:\n  thrust_kn: 100.0\n")
    assert cli.main(["optimize", "--config", str(cfg),
                     "--out", str(tmp_path)]) == 1
    assert "vehicle" in capsys.readouterr().err


def test_engine_spec_exclusivity(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("vehicle:\n  isp_s: 350.0\n"
                   "  exhaust_velocity_ms: 3432.0\n")
    assert cli.main(["optimize", "--config", str(cfg),
                     "--out", str(tmp_path)]) == 1


def test_missing_config_file(tmp_path):
    assert cli.main(["optimize", "--config", "no_such_mission",
                     "--out", str(tmp_path)]) == 1


def test_unknown_subcommand_exits_with_validation_code():
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 1


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["--version"])
    assert info.value.code == 0
    assert "upstage" in capsys.readouterr().out
