import json
from pathlib import Path

import numpy as np
import pytest

from pneusim import cli
from pneusim.sim import simulate, step_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def write_json(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, indent=1), encoding="utf-8")
    return path


def minimal_scenario(**run_overrides) -> dict:
    run = {"dt_s": 0.0005, "duration_s": 0.5, "sample_rate_Hz": 1000.0}
    run.update(run_overrides)
    return {
        "schema_version": 1,
        "command": {"kind": "step", "target_kPa": 69.0},
        "run": run,
    }


class TestResolveScenario:
    def test_defaults_materialized(self):
        resolved = cli.resolve_scenario(minimal_scenario())
        assert resolved["network"]["reservoir"]["V_r_L"] == 2.0
        assert resolved["network"]["inflation_valve"]["R_vmin_kPa_s_per_L"] == pytest.approx(
            689.0 / (23.5 / 60.0)
        )
        assert resolved["controller"]["kp_per_kPa"] == 0.05
        assert resolved["gas"]["T_K"] == 293.15

    def test_resolution_idempotent(self):
        once = cli.resolve_scenario(minimal_scenario())
        twice = cli.resolve_scenario(json.loads(json.dumps(once)))
        assert once == twice

    def test_slpm_conversion(self):
        raw = minimal_scenario()
        raw["network"] = {"inflation_valve": {"flow_max_slpm": 30.0, "P_inlet_max_kPa": 600.0}}
        resolved = cli.resolve_scenario(raw)
        assert resolved["network"]["inflation_valve"]["R_vmin_kPa_s_per_L"] == pytest.approx(
            600.0 / 0.5
        )

    def test_unknown_key_rejected(self):
        raw = minimal_scenario()
        raw["network"] = {"reservoir": {"V_r_L": 2.0, "psi": 100.0}}
        with pytest.raises(cli.ConfigError, match="psi"):
            cli.resolve_scenario(raw)

    def test_negative_volume_names_field(self):
        raw = minimal_scenario()
        raw["network"] = {"control_volume": {"V_cv_L": -0.5}}
        with pytest.raises(cli.ConfigError, match=r"control_volume\.V_cv_L"):
            cli.resolve_scenario(raw)

    def test_schema_version_required(self):
        raw = minimal_scenario()
        del raw["schema_version"]
        with pytest.raises(cli.ConfigError, match="schema_version"):
            cli.resolve_scenario(raw)

    def test_both_resistance_forms_rejected(self):
        raw = minimal_scenario()
        raw["network"] = {
            "inflation_valve": {"R_vmin_kPa_s_per_L": 1000.0, "flow_max_slpm": 23.5}
        }
        with pytest.raises(cli.ConfigError, match="not both"):
            cli.resolve_scenario(raw)

    def test_open_loop_command_required(self):
        raw = minimal_scenario(mode="open_loop")
        with pytest.raises(cli.ConfigError, match="open_loop_command"):
            cli.resolve_scenario(raw)

    def test_shipped_scenarios_resolve(self):
        for name in (
            "step_69kpa_half_liter",
            "sweep_21kpa_half_liter",
            "discharge_2l_bottle",
        ):
            raw = json.loads((SCENARIOS / f"{name}.json").read_text())
            scn, resolved = (
                cli.scenario_from_resolved(cli.resolve_scenario(raw)),
                cli.resolve_scenario(raw),
            )
            assert cli.resolve_scenario(json.loads(json.dumps(resolved))) == resolved


class TestCsvRoundTrip:
    def test_write_read(self, tmp_path):
        ts = simulate(step_scenario(69.0, duration=0.2))
        path = tmp_path / "trace.csv"
        cli.write_timeseries_csv(ts, path)
        back = cli.read_timeseries_csv(path)
        assert np.allclose(back.p_cv, ts.p_cv, rtol=1e-8, atol=1e-9)
        assert np.array_equal(back.mode, ts.mode)
        header = path.read_text().splitlines()[0]
        assert header == cli.CSV_HEADER

    def test_lf_line_endings(self, tmp_path):
        ts = simulate(step_scenario(69.0, duration=0.1))
        path = tmp_path / "trace.csv"
        cli.write_timeseries_csv(ts, path)
        assert b"\r" not in path.read_bytes()


class TestSimulateCommand:
    def test_writes_trace_and_manifest(self, tmp_path):
        scn_file = write_json(tmp_path / "step.json", minimal_scenario())
        rc = cli.main(["simulate", str(scn_file), "--out", str(tmp_path / "out")])
        assert rc == 0
        csv_path = tmp_path / "out" / "step_timeseries.csv"
        manifest_path = tmp_path / "out" / "step_manifest.json"
        assert csv_path.exists() and manifest_path.exists()
        manifest = json.loads(manifest_path.read_text())
        assert manifest["inputs"]["scenario"]["sha256"]
        assert manifest["resolved"]["run"]["duration_s"] == 0.5

    def test_byte_identical_reruns(self, tmp_path):
        scn_file = write_json(tmp_path / "step.json", minimal_scenario())
        assert cli.main(["simulate", str(scn_file), "--out", str(tmp_path / "a")]) == 0
        assert cli.main(["simulate", str(scn_file), "--out", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "step_timeseries.csv").read_bytes()
        b = (tmp_path / "b" / "step_timeseries.csv").read_bytes()
        assert a == b

    def test_step_scenario_csv_rise_slope(self, tmp_path):
        rc = cli.main(
            [
                "simulate",
                str(SCENARIOS / "step_69kpa_half_liter.json"),
                "--duration",
                "0.4",
                "--out",
                str(tmp_path),
            ]
        )
        assert rc == 0
        ts = cli.read_timeseries_csv(tmp_path / "step_69kpa_half_liter_timeseries.csv")
        i = int(np.searchsorted(ts.t, 0.05))
        slope = (ts.p_cv[i] - ts.p_cv[0]) / (ts.t[i] - ts.t[0])
        assert slope == pytest.approx(79.37, rel=0.02)

    def test_flag_overrides_recorded(self, tmp_path):
        scn_file = write_json(tmp_path / "step.json", minimal_scenario())
        rc = cli.main(
            ["simulate", str(scn_file), "--duration", "0.25", "--out", str(tmp_path / "out")]
        )
        assert rc == 0
        manifest = json.loads((tmp_path / "out" / "step_manifest.json").read_text())
        assert manifest["cli_overrides"] == {"duration_s": 0.25}
        assert manifest["resolved"]["run"]["duration_s"] == 0.25

    def test_validation_failure_exit_2(self, tmp_path, capsys):
        bad = minimal_scenario()
        bad["network"] = {"control_volume": {"V_cv_L": -0.5}}
        scn_file = write_json(tmp_path / "bad.json", bad)
        rc = cli.main(["simulate", str(scn_file), "--out", str(tmp_path / "out")])
        assert rc == 2
        assert "V_cv_L" in capsys.readouterr().err

    def test_missing_file_exit_2(self, tmp_path):
        assert cli.main(["simulate", str(tmp_path / "nope.json")]) == 2

    def test_divergence_exit_3(self, tmp_path):
        raw = minimal_scenario(
            mode="open_loop", open_loop_command={"u_evp": 0.0, "u_dvp": 0.0, "solenoid_open": True}
        )
        raw["network"] = {
            "control_volume": {"V_cv_L": 0.1, "P_cv0_kPa": 100.0},
            "solenoid": {"R_open_kPa_s_per_L": 0.01},
        }
        scn_file = write_json(tmp_path / "stiff.json", raw)
        assert cli.main(["simulate", str(scn_file), "--out", str(tmp_path / "out")]) == 3


class TestSweepCommand:
    def test_single_passband_point(self, tmp_path):
        rc = cli.main(
            [
                "sweep",
                str(SCENARIOS / "sweep_21kpa_half_liter.json"),
                "--omegas",
                "0.14",
                "--out",
                str(tmp_path),
            ]
        )
        assert rc == 0
        rows = (tmp_path / "sweep_21kpa_half_liter_sweep.csv").read_text().splitlines()
        assert rows[0] == "omega_Hz,gain,n_periods,error"
        omega, gain, n_periods, err = rows[1].split(",")
        assert float(gain) == pytest.approx(1.0, abs=0.05)
        assert int(n_periods) >= 3
        fit = json.loads((tmp_path / "sweep_21kpa_half_liter_sweep_fit.json").read_text())
        assert fit["n_failed"] == 0

    def test_empty_omegas_exit_2(self, tmp_path):
        rc = cli.main(
            [
                "sweep",
                str(SCENARIOS / "sweep_21kpa_half_liter.json"),
                "--omegas",
                "",
                "--out",
                str(tmp_path),
            ]
        )
        assert rc == 2

    def test_non_sine_scenario_exit_2(self, tmp_path):
        scn_file = write_json(tmp_path / "step.json", minimal_scenario())
        rc = cli.main(["sweep", str(scn_file), "--omegas", "0.5", "--out", str(tmp_path)])
        assert rc == 2


class TestDischargeCommand:
    def test_fit_matches_closed_form(self, tmp_path):
        rc = cli.main(
            [
                "discharge",
                str(SCENARIOS / "discharge_2l_bottle.json"),
                "--out",
                str(tmp_path),
            ]
        )
        assert rc == 0
        fit = json.loads((tmp_path / "discharge_2l_bottle_discharge_fit.json").read_text())
        assert fit["tau_s"] == pytest.approx(34.726, rel=1e-3)
        assert fit["nrmse"] < 0.01
        assert not fit["degenerate"]

    def test_doubling_reservoir_doubles_tau(self, tmp_path):
        raw = json.loads((SCENARIOS / "discharge_2l_bottle.json").read_text())
        raw["network"]["reservoir"]["V_r_L"] = 4.0
        raw["run"]["duration_s"] = 180.0
        scn_file = write_json(tmp_path / "discharge_4l.json", raw)
        assert cli.main(["discharge", str(scn_file), "--out", str(tmp_path)]) == 0
        fit = json.loads((tmp_path / "discharge_4l_discharge_fit.json").read_text())
        assert fit["tau_s"] == pytest.approx(2 * 34.726, rel=1e-3)

    def test_empty_reservoir_flagged_degenerate(self, tmp_path):
        raw = json.loads((SCENARIOS / "discharge_2l_bottle.json").read_text())
        raw["network"]["reservoir"]["P_r0_kPa"] = 0.0
        raw["run"]["duration_s"] = 5.0
        scn_file = write_json(tmp_path / "flat.json", raw)
        assert cli.main(["discharge", str(scn_file), "--out", str(tmp_path)]) == 0
        fit = json.loads((tmp_path / "flat_discharge_fit.json").read_text())
        assert fit["degenerate"]

    def test_closed_loop_scenario_rejected(self, tmp_path):
        scn_file = write_json(tmp_path / "step.json", minimal_scenario())
        assert cli.main(["discharge", str(scn_file), "--out", str(tmp_path)]) == 2


class TestSizeCommand:
    def test_demo_requirements(self, tmp_path):
        rc = cli.main(
            [
                "size",
                str(SCENARIOS / "demo_requirements.json"),
                str(SCENARIOS / "reference_catalog.json"),
                "--out",
                str(tmp_path),
            ]
        )
        assert rc == 0
        report = json.loads((tmp_path / "demo_requirements_design_report.json").read_text())
        assert report["feasible"]
        top = report["feasible"][0]
        assert top["n_cycles"] == pytest.approx(302.85, abs=0.5)
        assert top["valve"] == "EVP-2505"

    def test_impossible_requirements_exit_4(self, tmp_path):
        req = {
            "schema_version": 1,
            "V_cv_L": 0.1,
            "dP_cv_kPa": 20.7,
            "Pdot_d_kPa_s": 35.8,
            "min_cycles": 1e6,
        }
        req_file = write_json(tmp_path / "req.json", req)
        rc = cli.main(
            [
                "size",
                str(req_file),
                str(SCENARIOS / "reference_catalog.json"),
                "--out",
                str(tmp_path),
            ]
        )
        assert rc == 4
        report = json.loads((tmp_path / "req_design_report.json").read_text())
        assert not report["feasible"]
        assert report["infeasible"][0]["limiting"] == ["cycle count"]

    def test_single_entry_catalog_single_row(self, tmp_path):
        cat = {
            "schema_version": 1,
            "valves": [
                {"name": "EVP", "flow_max_slpm": 23.5, "P_inlet_max_kPa": 689.0, "mass_g": 77.0}
            ],
            "reservoirs": [{"name": "B", "V_r_L": 2.0, "mass_g": 70.0, "P_max_kPa": 689.0}],
        }
        cat_file = write_json(tmp_path / "cat.json", cat)
        rc = cli.main(
            [
                "size",
                str(SCENARIOS / "demo_requirements.json"),
                str(cat_file),
                "--out",
                str(tmp_path),
            ]
        )
        assert rc == 0
        report = json.loads((tmp_path / "demo_requirements_design_report.json").read_text())
        assert len(report["feasible"]) + len(report["infeasible"]) == 1

    def test_unknown_catalog_key_exit_2(self, tmp_path, capsys):
        cat = {
            "schema_version": 1,
            "valves": [
                {
                    "name": "EVP",
                    "flow_max_slpm": 23.5,
                    "P_inlet_max_kPa": 689.0,
                    "mass_g": 77.0,
                    "color": "blue",
                }
            ],
            "reservoirs": [{"name": "B", "V_r_L": 2.0, "mass_g": 70.0, "P_max_kPa": 689.0}],
        }
        cat_file = write_json(tmp_path / "cat.json", cat)
        rc = cli.main(
            ["size", str(SCENARIOS / "demo_requirements.json"), str(cat_file), "--out", str(tmp_path)]
        )
        assert rc == 2
        assert "color" in capsys.readouterr().err
