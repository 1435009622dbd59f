"""Command-line front end: JSON scenarios in, CSV/JSON results out.

Subcommands: simulate (time series), sweep (frequency response), discharge
(blowdown trace plus time-constant fit), size (catalog feasibility report).

Input files are strict JSON: a required "schema_version": 1, unit-suffixed
key names, and unknown keys rejected. Flow rates given in SLPM are converted
to std L/s on ingestion. Every run writes a manifest with the sha256 of the
raw input and of the fully resolved configuration; identical manifests imply
byte-identical outputs. Exit codes: 0 ok, 2 validation error, 3 simulation
failure, 4 empty feasible set.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis
from .components import (
    BinaryValveSpec,
    ControlVolume,
    PneumaticNetwork,
    ProportionalValveSpec,
    Reservoir,
    SensorSpec,
    VenturiSpec,
)
from .control import ActuatorCommand, ControllerConfig
from .gasmodel import GasConstants, alpha
from .sim import (
    MODE_BY_CODE,
    MODE_CODES,
    PiecewiseCommand,
    Scenario,
    SimulationDivergence,
    SineCommand,
    StepCommand,
    TimeSeries,
    simulate,
)
from .sizing import (
    ComponentCatalog,
    DesignRequirements,
    ReservoirOption,
    ValveOption,
    VenturiOption,
    enumerate_catalog,
)

CSV_HEADER = "t_s,P_cmd_kPa,P_cv_kPa,P_r_kPa,u_evp,u_dvp,solenoid,Q_in_slps,Q_out_slps,Q_motive_slps,mode"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SIMULATION = 3
EXIT_NO_FEASIBLE = 4


class ConfigError(ValueError):
    """Input-file validation failure; the message names the offending field."""


# ---------------------------------------------------------------- strict JSON

_MISSING = object()


def _require_obj(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object")
    return dict(value)


def _reject_unknown(obj: dict, path: str) -> None:
    if obj:
        keys = ", ".join(sorted(obj))
        raise ConfigError(f"{path}: unknown key(s): {keys}")


def _pop_number(obj: dict, path: str, key: str, default=_MISSING, positive=False, non_negative=False):
    if key not in obj:
        if default is _MISSING:
            raise ConfigError(f"{path}.{key}: required")
        return default
    value = obj.pop(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{path}.{key}: must be finite")
    if positive and not value > 0.0:
        raise ConfigError(f"{path}.{key}: must be > 0")
    if non_negative and value < 0.0:
        raise ConfigError(f"{path}.{key}: must be >= 0")
    return value


def _pop_int(obj: dict, path: str, key: str, default=_MISSING, non_negative=True):
    if key not in obj:
        if default is _MISSING:
            raise ConfigError(f"{path}.{key}: required")
        return default
    value = obj.pop(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}: expected an integer")
    if non_negative and value < 0:
        raise ConfigError(f"{path}.{key}: must be >= 0")
    return value


def _pop_bool(obj: dict, path: str, key: str, default=_MISSING):
    if key not in obj:
        if default is _MISSING:
            raise ConfigError(f"{path}.{key}: required")
        return default
    value = obj.pop(key)
    if not isinstance(value, bool):
        raise ConfigError(f"{path}.{key}: expected true or false")
    return value


def _pop_str(obj: dict, path: str, key: str, default=_MISSING):
    if key not in obj:
        if default is _MISSING:
            raise ConfigError(f"{path}.{key}: required")
        return default
    value = obj.pop(key)
    if not isinstance(value, str):
        raise ConfigError(f"{path}.{key}: expected a string")
    return value


def _check_schema_version(obj: dict, path: str) -> None:
    version = _pop_int(obj, path, "schema_version")
    if version != 1:
        raise ConfigError(f"{path}.schema_version: unsupported version {version}")


# ------------------------------------------------------------ scenario schema


def _resolve_valve(raw: dict, path: str) -> dict:
    obj = _require_obj(raw, path)
    p_inlet = _pop_number(obj, path, "P_inlet_max_kPa", default=690.0, positive=True)
    deadband = _pop_number(obj, path, "deadband", default=0.0, non_negative=True)
    if deadband >= 1.0:
        raise ConfigError(f"{path}.deadband: must be < 1")
    has_r = "R_vmin_kPa_s_per_L" in obj
    has_flow = "flow_max_slpm" in obj
    if has_r and has_flow:
        raise ConfigError(f"{path}: give R_vmin_kPa_s_per_L or flow_max_slpm, not both")
    if has_r:
        r_vmin = _pop_number(obj, path, "R_vmin_kPa_s_per_L", positive=True)
    elif has_flow:
        flow = _pop_number(obj, path, "flow_max_slpm", positive=True)
        r_vmin = p_inlet / (flow / 60.0)
    else:
        raise ConfigError(f"{path}: R_vmin_kPa_s_per_L or flow_max_slpm required")
    _reject_unknown(obj, path)
    return {"R_vmin_kPa_s_per_L": r_vmin, "deadband": deadband, "P_inlet_max_kPa": p_inlet}


def _resolve_sensor(raw: dict, path: str, range_default: float, seed_default: int) -> dict:
    obj = _require_obj(raw, path)
    out = {
        "range_max_kPa": _pop_number(obj, path, "range_max_kPa", default=range_default, positive=True),
        "noise_std_kPa": _pop_number(obj, path, "noise_std_kPa", default=0.0, non_negative=True),
        "seed": _pop_int(obj, path, "seed", default=seed_default),
    }
    _reject_unknown(obj, path)
    return out


def resolve_scenario(raw: dict) -> dict:
    """Validate a scenario document and materialize every default.

    Resolution is idempotent: resolving the resolved document returns it
    unchanged, which is what makes manifests round-trip exactly.
    """
    top = _require_obj(raw, "scenario")
    _check_schema_version(top, "scenario")

    gas_obj = _require_obj(top.pop("gas", {}), "scenario.gas")
    gas = {
        "rho_kg_per_m3": _pop_number(gas_obj, "scenario.gas", "rho_kg_per_m3", default=1.2041, positive=True),
        "R_u_J_per_mol_K": _pop_number(gas_obj, "scenario.gas", "R_u_J_per_mol_K", default=8.314, positive=True),
        "T_K": _pop_number(gas_obj, "scenario.gas", "T_K", default=293.15, positive=True),
        "M_kg_per_mol": _pop_number(gas_obj, "scenario.gas", "M_kg_per_mol", default=0.028965, positive=True),
    }
    _reject_unknown(gas_obj, "scenario.gas")

    net_obj = _require_obj(top.pop("network", {}), "scenario.network")
    res_obj = _require_obj(net_obj.pop("reservoir", {}), "scenario.network.reservoir")
    reservoir = {
        "V_r_L": _pop_number(res_obj, "scenario.network.reservoir", "V_r_L", default=2.0, positive=True),
        "P_r0_kPa": _pop_number(res_obj, "scenario.network.reservoir", "P_r0_kPa", default=689.0),
    }
    _reject_unknown(res_obj, "scenario.network.reservoir")

    cv_obj = _require_obj(net_obj.pop("control_volume", {}), "scenario.network.control_volume")
    control_volume = {
        "V_cv_L": _pop_number(cv_obj, "scenario.network.control_volume", "V_cv_L", default=0.5, positive=True),
        "P_cv0_kPa": _pop_number(cv_obj, "scenario.network.control_volume", "P_cv0_kPa", default=0.0),
    }
    _reject_unknown(cv_obj, "scenario.network.control_volume")

    inflation = _resolve_valve(
        net_obj.pop("inflation_valve", {"flow_max_slpm": 23.5, "P_inlet_max_kPa": 689.0}),
        "scenario.network.inflation_valve",
    )
    motive = _resolve_valve(
        net_obj.pop("motive_valve", {"flow_max_slpm": 67.0, "P_inlet_max_kPa": 689.0}),
        "scenario.network.motive_valve",
    )

    sol_obj = _require_obj(net_obj.pop("solenoid", {}), "scenario.network.solenoid")
    solenoid = {
        "R_open_kPa_s_per_L": _pop_number(sol_obj, "scenario.network.solenoid", "R_open_kPa_s_per_L", default=100.0, positive=True)
    }
    _reject_unknown(sol_obj, "scenario.network.solenoid")

    ven_obj = _require_obj(net_obj.pop("venturi", {}), "scenario.network.venturi")
    ven_path = "scenario.network.venturi"
    venturi = {
        "P_vac_floor_kPa": _pop_number(ven_obj, ven_path, "P_vac_floor_kPa", default=-80.0),
        "Q_motive_rated_slpm": _pop_number(ven_obj, ven_path, "Q_motive_rated_slpm", default=67.0, positive=True),
        "R_motive_kPa_s_per_L": _pop_number(ven_obj, ven_path, "R_motive_kPa_s_per_L", default=motive["R_vmin_kPa_s_per_L"], positive=True),
    }
    if not -101.325 < venturi["P_vac_floor_kPa"] < 0.0:
        raise ConfigError(f"{ven_path}.P_vac_floor_kPa: must be in (-101.325, 0)")
    _reject_unknown(ven_obj, ven_path)

    cv_sensor = _resolve_sensor(net_obj.pop("cv_sensor", {}), "scenario.network.cv_sensor", 207.0, 0)
    res_sensor = _resolve_sensor(
        net_obj.pop("reservoir_sensor", {}), "scenario.network.reservoir_sensor", 1500.0, 1
    )
    _reject_unknown(net_obj, "scenario.network")

    ctl_obj = _require_obj(top.pop("controller", {}), "scenario.controller")
    ctl_path = "scenario.controller"
    controller = {
        "kp_per_kPa": _pop_number(ctl_obj, ctl_path, "kp_per_kPa", default=0.05, non_negative=True),
        "ki_per_kPa_s": _pop_number(ctl_obj, ctl_path, "ki_per_kPa_s", default=0.5, non_negative=True),
        "kd_s_per_kPa": _pop_number(ctl_obj, ctl_path, "kd_s_per_kPa", default=0.0, non_negative=True),
        "error_cutoff_kPa": _pop_number(ctl_obj, ctl_path, "error_cutoff_kPa", default=1.0, positive=True),
        "control_rate_Hz": _pop_number(ctl_obj, ctl_path, "control_rate_Hz", default=1000.0, positive=True),
        "settle_horizon_s": _pop_number(ctl_obj, ctl_path, "settle_horizon_s", default=0.2, positive=True),
        "integrator_limit_kPa_s": _pop_number(ctl_obj, ctl_path, "integrator_limit_kPa_s", default=2.0, non_negative=True),
        "active_deflation_rate_threshold_kPa_s": _pop_number(
            ctl_obj, ctl_path, "active_deflation_rate_threshold_kPa_s", default=0.0, non_negative=True
        ),
    }
    _reject_unknown(ctl_obj, ctl_path)

    if "command" not in top:
        raise ConfigError("scenario.command: required")
    cmd_obj = _require_obj(top.pop("command"), "scenario.command")
    kind = _pop_str(cmd_obj, "scenario.command", "kind")
    if kind == "step":
        command = {
            "kind": "step",
            "target_kPa": _pop_number(cmd_obj, "scenario.command", "target_kPa", non_negative=True),
            "start_s": _pop_number(cmd_obj, "scenario.command", "start_s", default=0.0, non_negative=True),
        }
    elif kind == "sine":
        command = {
            "kind": "sine",
            "amplitude_kPa": _pop_number(cmd_obj, "scenario.command", "amplitude_kPa", non_negative=True),
            "frequency_Hz": _pop_number(cmd_obj, "scenario.command", "frequency_Hz", positive=True),
        }
        command["offset_kPa"] = _pop_number(
            cmd_obj, "scenario.command", "offset_kPa", default=command["amplitude_kPa"]
        )
        if command["offset_kPa"] < command["amplitude_kPa"]:
            raise ConfigError("scenario.command.offset_kPa: must be >= amplitude_kPa")
    elif kind == "piecewise":
        knots = cmd_obj.pop("knots", None)
        if not isinstance(knots, list) or not knots:
            raise ConfigError("scenario.command.knots: non-empty list required")
        parsed = []
        for i, knot in enumerate(knots):
            if (
                not isinstance(knot, list)
                or len(knot) != 2
                or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in knot)
            ):
                raise ConfigError(f"scenario.command.knots[{i}]: expected [time_s, value_kPa]")
            parsed.append([float(knot[0]), float(knot[1])])
        command = {"kind": "piecewise", "knots": parsed}
    else:
        raise ConfigError(f"scenario.command.kind: unknown kind {kind!r}")
    _reject_unknown(cmd_obj, "scenario.command")

    run_obj = _require_obj(top.pop("run", {}), "scenario.run")
    run_path = "scenario.run"
    run = {
        "dt_s": _pop_number(run_obj, run_path, "dt_s", default=5e-4, positive=True),
        "duration_s": _pop_number(run_obj, run_path, "duration_s", default=3.0, positive=True),
        "sample_rate_Hz": _pop_number(run_obj, run_path, "sample_rate_Hz", default=2000.0, positive=True),
        "seed": _pop_int(run_obj, run_path, "seed", default=0),
        "hold_reservoir": _pop_bool(run_obj, run_path, "hold_reservoir", default=False),
        "mode": _pop_str(run_obj, run_path, "mode", default="closed_loop"),
    }
    if run["mode"] not in ("closed_loop", "open_loop"):
        raise ConfigError("scenario.run.mode: expected 'closed_loop' or 'open_loop'")
    if run["mode"] == "open_loop":
        if "open_loop_command" not in run_obj:
            raise ConfigError(f"{run_path}.open_loop_command: required for open_loop mode")
        olc_path = f"{run_path}.open_loop_command"
        olc_obj = _require_obj(run_obj.pop("open_loop_command"), olc_path)
        olc = {
            "u_evp": _pop_number(olc_obj, olc_path, "u_evp", default=0.0, non_negative=True),
            "u_dvp": _pop_number(olc_obj, olc_path, "u_dvp", default=0.0, non_negative=True),
            "solenoid_open": _pop_bool(olc_obj, olc_path, "solenoid_open", default=False),
        }
        for key in ("u_evp", "u_dvp"):
            if olc[key] > 1.0:
                raise ConfigError(f"{olc_path}.{key}: must be <= 1")
        _reject_unknown(olc_obj, olc_path)
        run["open_loop_command"] = olc
    elif "open_loop_command" in run_obj:
        raise ConfigError(f"{run_path}.open_loop_command: only valid with mode 'open_loop'")
    _reject_unknown(run_obj, run_path)
    _reject_unknown(top, "scenario")

    return {
        "schema_version": 1,
        "gas": gas,
        "network": {
            "reservoir": reservoir,
            "control_volume": control_volume,
            "inflation_valve": inflation,
            "motive_valve": motive,
            "solenoid": solenoid,
            "venturi": venturi,
            "cv_sensor": cv_sensor,
            "reservoir_sensor": res_sensor,
        },
        "controller": controller,
        "command": command,
        "run": run,
    }


def scenario_from_resolved(resolved: dict) -> Scenario:
    gas = GasConstants(
        rho=resolved["gas"]["rho_kg_per_m3"],
        R_u=resolved["gas"]["R_u_J_per_mol_K"],
        T=resolved["gas"]["T_K"],
        M=resolved["gas"]["M_kg_per_mol"],
    )
    net_cfg = resolved["network"]
    network = PneumaticNetwork(
        reservoir=Reservoir(
            v_r=net_cfg["reservoir"]["V_r_L"], p_r0=net_cfg["reservoir"]["P_r0_kPa"]
        ),
        control_volume=ControlVolume(
            v_cv=net_cfg["control_volume"]["V_cv_L"], p_cv=net_cfg["control_volume"]["P_cv0_kPa"]
        ),
        inflation_valve=ProportionalValveSpec(
            r_vmin=net_cfg["inflation_valve"]["R_vmin_kPa_s_per_L"],
            u0=net_cfg["inflation_valve"]["deadband"],
            p_inlet_max=net_cfg["inflation_valve"]["P_inlet_max_kPa"],
        ),
        motive_valve=ProportionalValveSpec(
            r_vmin=net_cfg["motive_valve"]["R_vmin_kPa_s_per_L"],
            u0=net_cfg["motive_valve"]["deadband"],
            p_inlet_max=net_cfg["motive_valve"]["P_inlet_max_kPa"],
        ),
        solenoid=BinaryValveSpec(r_open=net_cfg["solenoid"]["R_open_kPa_s_per_L"]),
        venturi=VenturiSpec(
            p_vac_floor=net_cfg["venturi"]["P_vac_floor_kPa"],
            q_motive_rated=net_cfg["venturi"]["Q_motive_rated_slpm"] / 60.0,
            r_motive=net_cfg["venturi"]["R_motive_kPa_s_per_L"],
        ),
        cv_sensor=SensorSpec(
            range_max=net_cfg["cv_sensor"]["range_max_kPa"],
            noise_std=net_cfg["cv_sensor"]["noise_std_kPa"],
            seed=net_cfg["cv_sensor"]["seed"],
        ),
        reservoir_sensor=SensorSpec(
            range_max=net_cfg["reservoir_sensor"]["range_max_kPa"],
            noise_std=net_cfg["reservoir_sensor"]["noise_std_kPa"],
            seed=net_cfg["reservoir_sensor"]["seed"],
        ),
    )
    ctl = resolved["controller"]
    controller = ControllerConfig(
        kp=ctl["kp_per_kPa"],
        ki=ctl["ki_per_kPa_s"],
        kd=ctl["kd_s_per_kPa"],
        error_cutoff=ctl["error_cutoff_kPa"],
        control_rate=ctl["control_rate_Hz"],
        settle_horizon=ctl["settle_horizon_s"],
        integrator_limit=ctl["integrator_limit_kPa_s"],
        active_deflation_rate_threshold=ctl["active_deflation_rate_threshold_kPa_s"],
        passive_vent_coeff=alpha(gas)
        / (net_cfg["solenoid"]["R_open_kPa_s_per_L"] * net_cfg["control_volume"]["V_cv_L"]),
    )
    cmd_cfg = resolved["command"]
    if cmd_cfg["kind"] == "step":
        command = StepCommand(target_kpa=cmd_cfg["target_kPa"], start_s=cmd_cfg["start_s"])
    elif cmd_cfg["kind"] == "sine":
        command = SineCommand(
            amplitude_kpa=cmd_cfg["amplitude_kPa"],
            freq_hz=cmd_cfg["frequency_Hz"],
            offset_kpa=cmd_cfg["offset_kPa"],
        )
    else:
        command = PiecewiseCommand(knots=tuple((t, v) for t, v in cmd_cfg["knots"]))
    run = resolved["run"]
    open_loop = None
    if run["mode"] == "open_loop":
        olc = run["open_loop_command"]
        open_loop = ActuatorCommand(olc["u_evp"], olc["u_dvp"], olc["solenoid_open"])
    scn = Scenario(
        network=network,
        controller=controller,
        command=command,
        dt=run["dt_s"],
        duration=run["duration_s"],
        sample_rate=run["sample_rate_Hz"],
        seed=run["seed"],
        hold_reservoir=run["hold_reservoir"],
        open_loop_command=open_loop,
        gas=gas,
    )
    scn.validate()
    return scn


def load_scenario(path: Path, overrides: dict | None = None) -> tuple[Scenario, dict]:
    raw = _load_json(path)
    resolved = resolve_scenario(raw)
    for key, value in (overrides or {}).items():
        resolved["run"][key] = value
    return scenario_from_resolved(resolved), resolved


# ------------------------------------------------------- requirements/catalog


def resolve_requirements(raw: dict) -> dict:
    obj = _require_obj(raw, "requirements")
    _check_schema_version(obj, "requirements")
    out = {
        "schema_version": 1,
        "V_cv_L": _pop_number(obj, "requirements", "V_cv_L", positive=True),
        "dP_cv_kPa": _pop_number(obj, "requirements", "dP_cv_kPa", positive=True),
        "min_cycles": _pop_number(obj, "requirements", "min_cycles", default=0.0, non_negative=True),
    }
    for key in ("Pdot_d_kPa_s", "amplitude_kPa", "frequency_Hz"):
        if key in obj:
            out[key] = _pop_number(obj, "requirements", key, positive=True)
    _reject_unknown(obj, "requirements")
    has_rate = "Pdot_d_kPa_s" in out
    has_pair = "amplitude_kPa" in out and "frequency_Hz" in out
    if not has_rate and not has_pair:
        raise ConfigError(
            "requirements: Pdot_d_kPa_s or both amplitude_kPa and frequency_Hz required"
        )
    return out


def requirements_from_resolved(resolved: dict) -> DesignRequirements:
    return DesignRequirements(
        v_cv=resolved["V_cv_L"],
        dp_cv=resolved["dP_cv_kPa"],
        pdot_d=resolved.get("Pdot_d_kPa_s"),
        amplitude=resolved.get("amplitude_kPa"),
        freq_hz=resolved.get("frequency_Hz"),
        min_cycles=resolved["min_cycles"],
    )


def resolve_catalog(raw: dict) -> dict:
    obj = _require_obj(raw, "catalog")
    _check_schema_version(obj, "catalog")
    valves_raw = obj.pop("valves", None)
    reservoirs_raw = obj.pop("reservoirs", None)
    venturis_raw = obj.pop("venturis", [])
    _reject_unknown(obj, "catalog")
    if not isinstance(valves_raw, list) or not valves_raw:
        raise ConfigError("catalog.valves: non-empty list required")
    if not isinstance(reservoirs_raw, list) or not reservoirs_raw:
        raise ConfigError("catalog.reservoirs: non-empty list required")
    if not isinstance(venturis_raw, list):
        raise ConfigError("catalog.venturis: expected a list")

    valves = []
    for i, entry in enumerate(valves_raw):
        path = f"catalog.valves[{i}]"
        v = _require_obj(entry, path)
        name = _pop_str(v, path, "name")
        mass = _pop_number(v, path, "mass_g", positive=True)
        resolved = _resolve_valve(v, path)  # consumes the remaining valve keys
        valves.append(
            {
                "name": name,
                "R_vmin_kPa_s_per_L": resolved["R_vmin_kPa_s_per_L"],
                "P_inlet_max_kPa": resolved["P_inlet_max_kPa"],
                "mass_g": mass,
            }
        )

    reservoirs = []
    for i, entry in enumerate(reservoirs_raw):
        path = f"catalog.reservoirs[{i}]"
        r = _require_obj(entry, path)
        reservoirs.append(
            {
                "name": _pop_str(r, path, "name"),
                "V_r_L": _pop_number(r, path, "V_r_L", positive=True),
                "mass_g": _pop_number(r, path, "mass_g", positive=True),
                "P_max_kPa": _pop_number(r, path, "P_max_kPa", positive=True),
            }
        )
        _reject_unknown(r, path)

    venturis = []
    for i, entry in enumerate(venturis_raw):
        path = f"catalog.venturis[{i}]"
        v = _require_obj(entry, path)
        venturis.append(
            {
                "name": _pop_str(v, path, "name"),
                "P_vac_floor_kPa": _pop_number(v, path, "P_vac_floor_kPa"),
                "Q_motive_rated_slpm": _pop_number(v, path, "Q_motive_rated_slpm", positive=True),
                "mass_g": _pop_number(v, path, "mass_g", positive=True),
            }
        )
        _reject_unknown(v, path)
    return {
        "schema_version": 1,
        "valves": valves,
        "reservoirs": reservoirs,
        "venturis": venturis,
    }


def catalog_from_resolved(resolved: dict) -> ComponentCatalog:
    return ComponentCatalog(
        valves=tuple(
            ValveOption(
                name=v["name"],
                r_vmin=v["R_vmin_kPa_s_per_L"],
                mass_g=v["mass_g"],
                p_inlet_max=v["P_inlet_max_kPa"],
            )
            for v in resolved["valves"]
        ),
        reservoirs=tuple(
            ReservoirOption(
                name=r["name"], v_r=r["V_r_L"], mass_g=r["mass_g"], p_max=r["P_max_kPa"]
            )
            for r in resolved["reservoirs"]
        ),
        venturis=tuple(
            VenturiOption(
                name=v["name"],
                p_vac_floor=v["P_vac_floor_kPa"],
                q_motive_rated=v["Q_motive_rated_slpm"] / 60.0,
                mass_g=v["mass_g"],
            )
            for v in resolved["venturis"]
        ),
    )


# ------------------------------------------------------------- files and hash


def _load_json(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _sha256_config(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def write_timeseries_csv(ts: TimeSeries, path: Path) -> None:
    """Fixed-header CSV, 9 significant digits, LF line endings."""
    lines = [CSV_HEADER]
    for i in range(len(ts)):
        lines.append(
            ",".join(
                (
                    _fmt(ts.t[i]),
                    _fmt(ts.p_cmd[i]),
                    _fmt(ts.p_cv[i]),
                    _fmt(ts.p_r[i]),
                    _fmt(ts.u_inflate[i]),
                    _fmt(ts.u_motive[i]),
                    str(int(ts.solenoid[i])),
                    _fmt(ts.q_in[i]),
                    _fmt(ts.q_out[i]),
                    _fmt(ts.q_motive[i]),
                    MODE_BY_CODE[int(ts.mode[i])].value,
                )
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_timeseries_csv(path: Path) -> TimeSeries:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"{path}: unexpected CSV header")
    cols = [line.split(",") for line in lines[1:] if line]
    by_mode = {mode.value: code for mode, code in MODE_CODES.items()}
    arr = lambda idx: np.array([float(row[idx]) for row in cols])
    return TimeSeries(
        t=arr(0),
        p_cmd=arr(1),
        p_cv=arr(2),
        p_r=arr(3),
        u_inflate=arr(4),
        u_motive=arr(5),
        solenoid=arr(6),
        q_in=arr(7),
        q_out=arr(8),
        q_motive=arr(9),
        mode=np.array([by_mode[row[10]] for row in cols], dtype=np.uint8),
    )


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_manifest(
    out_dir: Path,
    stem: str,
    command: str,
    input_paths: dict[str, Path],
    resolved: dict,
    overrides: dict,
    outputs: list[str],
) -> Path:
    manifest = {
        "schema_version": 1,
        "tool": "pneusim",
        "tool_version": __version__,
        "command": command,
        "inputs": {
            name: {"path": str(p), "sha256": _sha256_file(p)} for name, p in input_paths.items()
        },
        "cli_overrides": overrides,
        "resolved": resolved,
        "resolved_sha256": _sha256_config(resolved),
        "outputs": outputs,
    }
    path = out_dir / f"{stem}_manifest.json"
    _write_json(path, manifest)
    return path


# ------------------------------------------------------------------- commands


def _run_overrides(args) -> dict:
    overrides = {}
    if args.dt is not None:
        overrides["dt_s"] = args.dt
    if args.duration is not None:
        overrides["duration_s"] = args.duration
    if args.sample_rate is not None:
        overrides["sample_rate_Hz"] = args.sample_rate
    if args.seed is not None:
        overrides["seed"] = args.seed
    return overrides


def cmd_simulate(args) -> int:
    scenario_path = Path(args.scenario)
    overrides = _run_overrides(args)
    scn, resolved = load_scenario(scenario_path, overrides)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = scenario_path.stem
    ts = simulate(scn)
    csv_path = out_dir / f"{stem}_timeseries.csv"
    write_timeseries_csv(ts, csv_path)
    _write_manifest(
        out_dir, stem, "simulate", {"scenario": scenario_path}, resolved, overrides, [csv_path.name]
    )
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario_path = Path(args.scenario)
    overrides = _run_overrides(args)
    scn, resolved = load_scenario(scenario_path, overrides)
    if not isinstance(scn.command, SineCommand):
        raise ConfigError("scenario.command.kind: sweep needs a sine command")
    try:
        omegas = [float(w) for w in args.omegas.split(",") if w.strip()]
    except ValueError:
        raise ConfigError("--omegas: expected comma-separated numbers")
    if not omegas:
        raise ConfigError("--omegas: at least one frequency required")
    if any(not w > 0 for w in omegas):
        raise ConfigError("--omegas: frequencies must be > 0")

    points = analysis.frequency_sweep(scn, omegas, n_repeat=args.repeats)
    ok = [p for p in points if p.error is None]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = scenario_path.stem

    lines = ["omega_Hz,gain,n_periods,error"]
    for p in sorted(points, key=lambda p: p.omega):
        err = (p.error or "").replace(",", ";")
        lines.append(f"{_fmt(p.omega)},{_fmt(p.gain)},{p.n_periods},{err}")
    table_path = out_dir / f"{stem}_sweep.csv"
    table_path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

    fit: dict = {
        "schema_version": 1,
        "input_sha256": _sha256_file(scenario_path),
        "n_points": len(points),
        "n_failed": len(points) - len(ok),
    }
    if len(ok) >= 2:
        fit["knee_Hz"] = analysis.fit_rolloff_knee(
            [p.omega for p in ok], [p.gain for p in ok]
        )
        f3db = analysis.first_crossing_3db([p.omega for p in ok], [p.gain for p in ok])
        fit["first_3db_crossing_Hz"] = None if math.isnan(f3db) else f3db
    fit_path = out_dir / f"{stem}_sweep_fit.json"
    _write_json(fit_path, fit)
    _write_manifest(
        out_dir,
        stem,
        "sweep",
        {"scenario": scenario_path},
        resolved,
        {**overrides, "omegas_Hz": omegas, "repeats": args.repeats},
        [table_path.name, fit_path.name],
    )
    print(f"wrote {table_path}")
    if not ok:
        print("error: every sweep point failed", file=sys.stderr)
        return EXIT_SIMULATION
    return EXIT_OK


def cmd_discharge(args) -> int:
    scenario_path = Path(args.scenario)
    overrides = _run_overrides(args)
    scn, resolved = load_scenario(scenario_path, overrides)
    if scn.closed_loop:
        raise ConfigError("scenario.run.mode: discharge needs an open_loop scenario")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = scenario_path.stem
    ts = simulate(scn)
    csv_path = out_dir / f"{stem}_timeseries.csv"
    write_timeseries_csv(ts, csv_path)

    report: dict = {"schema_version": 1, "input_sha256": _sha256_file(scenario_path)}
    try:
        fit = analysis.fit_discharge_tau(ts)
        report.update(
            {
                "degenerate": fit.degenerate,
                "tau_s": None if math.isinf(fit.tau_s) else fit.tau_s,
                "P_r0_fit_kPa": fit.p_r0_fit,
                "nrmse": fit.nrmse,
            }
        )
    except ValueError as exc:
        report.update({"degenerate": True, "tau_s": None, "reason": str(exc)})
    fit_path = out_dir / f"{stem}_discharge_fit.json"
    _write_json(fit_path, report)
    _write_manifest(
        out_dir,
        stem,
        "discharge",
        {"scenario": scenario_path},
        resolved,
        overrides,
        [csv_path.name, fit_path.name],
    )
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_size(args) -> int:
    req_path = Path(args.requirements)
    cat_path = Path(args.catalog)
    req_resolved = resolve_requirements(_load_json(req_path))
    cat_resolved = resolve_catalog(_load_json(cat_path))
    req = requirements_from_resolved(req_resolved)
    catalog = catalog_from_resolved(cat_resolved)
    report = enumerate_catalog(req, catalog)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = req_path.stem
    payload = {
        "schema_version": 1,
        "input_sha256": {
            "requirements": _sha256_file(req_path),
            "catalog": _sha256_file(cat_path),
        },
        "feasible": [asdict(e) for e in report.feasible],
        "infeasible": [asdict(e) for e in report.infeasible],
    }
    report_path = out_dir / f"{stem}_design_report.json"
    _write_json(report_path, payload)
    _write_manifest(
        out_dir,
        stem,
        "size",
        {"requirements": req_path, "catalog": cat_path},
        {"requirements": req_resolved, "catalog": cat_resolved},
        {},
        [report_path.name],
    )
    print(f"wrote {report_path}")
    if not report.feasible:
        print("error: no feasible configuration", file=sys.stderr)
        return EXIT_NO_FEASIBLE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pneusim",
        description="Simulate and size portable high-flow pneumatic supply/regulation systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_flags = argparse.ArgumentParser(add_help=False)
    run_flags.add_argument("--dt", type=float, default=None, help="integration step (s)")
    run_flags.add_argument("--duration", type=float, default=None, help="run length (s)")
    run_flags.add_argument("--sample-rate", type=float, default=None, help="output rate (Hz)")
    run_flags.add_argument("--seed", type=int, default=None, help="run seed")
    run_flags.add_argument("--out", default="out", help="output directory (default: out)")

    p_sim = sub.add_parser("simulate", parents=[run_flags], help="run one scenario")
    p_sim.add_argument("scenario", help="scenario JSON file")
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", parents=[run_flags], help="frequency-response sweep")
    p_sweep.add_argument("scenario", help="scenario JSON file with a sine command")
    p_sweep.add_argument("--omegas", required=True, help="comma-separated frequencies (Hz)")
    p_sweep.add_argument("--repeats", type=int, default=1, help="runs per point (noisy sensors)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_dis = sub.add_parser("discharge", parents=[run_flags], help="reservoir blowdown and fit")
    p_dis.add_argument("scenario", help="open-loop discharge scenario JSON file")
    p_dis.set_defaults(func=cmd_discharge)

    p_size = sub.add_parser("size", help="catalog feasibility report")
    p_size.add_argument("requirements", help="requirements JSON file")
    p_size.add_argument("catalog", help="component catalog JSON file")
    p_size.add_argument("--out", default="out", help="output directory (default: out)")
    p_size.set_defaults(func=cmd_size)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SimulationDivergence as exc:
        print(f"error: simulation diverged: {exc}", file=sys.stderr)
        return EXIT_SIMULATION


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
