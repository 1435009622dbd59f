"""Lumped-parameter models of the pneumatic hardware.

Reservoir, control volume (the regulated actuator volume), proportional
valves, the binary exhaust solenoid, the Venturi vacuum generator, and the
pressure sensors. Component specs are immutable; running pressures are owned
by a single simulation run at a time.

Default numbers correspond to the reference hardware class this toolkit
targets: a 2 L bottle reservoir charged to 689 kPa, a 23.5 SLPM inflation
valve and a 67 SLPM motive valve both rated for 690 kPa inlet, and a Venturi
generator that reaches -80 kPa at rated motive flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gasmodel import PERFECT_VACUUM_KPA

# Catalog-derived minimum flow resistances (kPa*s per std L): rated maximum
# flow assumed at full rated inlet pressure discharging to atmosphere.
EVP_R_VMIN = 689.0 / (23.5 / 60.0)
DVP_R_VMIN = 689.0 / (67.0 / 60.0)
SOLENOID_R_OPEN = 100.0
VENTURI_FLOOR_KPA = -80.0
VENTURI_Q_RATED = 67.0 / 60.0

CV_SENSOR_RANGE_KPA = 207.0
RESERVOIR_SENSOR_RANGE_KPA = 1500.0


def _check_gauge(value: float, name: str) -> None:
    if value < PERFECT_VACUUM_KPA:
        raise ValueError(f"{name} below perfect vacuum ({value} kPa)")


@dataclass
class Reservoir:
    """Rigid air reservoir; p_r is the running state, initialized from p_r0."""

    v_r: float = 2.0
    p_r0: float = 689.0
    p_r: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if not self.v_r > 0.0:
            raise ValueError("Reservoir.v_r must be strictly positive")
        _check_gauge(self.p_r0, "Reservoir.p_r0")
        if self.p_r is None:
            self.p_r = self.p_r0
        _check_gauge(self.p_r, "Reservoir.p_r")


@dataclass
class ControlVolume:
    """Rigid regulated volume (v_cv constant during a run)."""

    v_cv: float = 0.5
    p_cv: float = 0.0

    def __post_init__(self) -> None:
        if not self.v_cv > 0.0:
            raise ValueError("ControlVolume.v_cv must be strictly positive")
        _check_gauge(self.p_cv, "ControlVolume.p_cv")

    def moles(self, gc) -> float:
        """Gas content in mol (1 kPa*L = 1 J, so the ratio is already mol)."""
        from .gasmodel import ATMOSPHERE_KPA

        return (self.p_cv + ATMOSPHERE_KPA) * self.v_cv / (gc.R_u * gc.T)


@dataclass(frozen=True)
class ProportionalValveSpec:
    """Proportional valve with conductance affine in command above a deadband."""

    r_vmin: float = EVP_R_VMIN
    u0: float = 0.0
    p_inlet_max: float = 690.0

    def __post_init__(self) -> None:
        if not self.r_vmin > 0.0:
            raise ValueError("ProportionalValveSpec.r_vmin must be strictly positive")
        if not 0.0 <= self.u0 < 1.0:
            raise ValueError("ProportionalValveSpec.u0 must be in [0, 1)")
        if not self.p_inlet_max > 0.0:
            raise ValueError("ProportionalValveSpec.p_inlet_max must be strictly positive")


@dataclass(frozen=True)
class BinaryValveSpec:
    """On/off exhaust solenoid."""

    r_open: float = SOLENOID_R_OPEN

    def __post_init__(self) -> None:
        if not self.r_open > 0.0:
            raise ValueError("BinaryValveSpec.r_open must be strictly positive")


@dataclass(frozen=True)
class VenturiSpec:
    """Vacuum generator: node pressure ramps linearly with motive flow to a floor.

    r_motive is the fully open motive-path resistance (informational; the
    dynamic motive flow is computed through the motive valve spec).
    """

    p_vac_floor: float = VENTURI_FLOOR_KPA
    q_motive_rated: float = VENTURI_Q_RATED
    r_motive: float = DVP_R_VMIN

    def __post_init__(self) -> None:
        if not (PERFECT_VACUUM_KPA < self.p_vac_floor < 0.0):
            raise ValueError("VenturiSpec.p_vac_floor must be in (-101.325, 0)")
        if not self.q_motive_rated > 0.0:
            raise ValueError("VenturiSpec.q_motive_rated must be strictly positive")
        if not self.r_motive > 0.0:
            raise ValueError("VenturiSpec.r_motive must be strictly positive")


@dataclass(frozen=True)
class SensorSpec:
    """Gauge pressure sensor with optional gaussian noise and a saturation ceiling."""

    range_max: float = CV_SENSOR_RANGE_KPA
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.range_max > 0.0:
            raise ValueError("SensorSpec.range_max must be strictly positive")
        if self.noise_std < 0.0:
            raise ValueError("SensorSpec.noise_std must be non-negative")


@dataclass(frozen=True)
class PneumaticNetwork:
    """Connectivity of one supply/regulation channel.

    Inflation valve: reservoir -> control volume. Motive valve: reservoir ->
    Venturi -> atmosphere. Solenoid: control volume -> Venturi vacuum node
    (atmosphere when the Venturi is idle).
    """

    reservoir: Reservoir
    control_volume: ControlVolume
    inflation_valve: ProportionalValveSpec
    motive_valve: ProportionalValveSpec
    solenoid: BinaryValveSpec
    venturi: VenturiSpec
    cv_sensor: SensorSpec
    reservoir_sensor: SensorSpec


def default_network(
    v_r: float = 2.0,
    p_r0: float = 689.0,
    v_cv: float = 0.5,
    p_cv0: float = 0.0,
) -> PneumaticNetwork:
    return PneumaticNetwork(
        reservoir=Reservoir(v_r=v_r, p_r0=p_r0),
        control_volume=ControlVolume(v_cv=v_cv, p_cv=p_cv0),
        inflation_valve=ProportionalValveSpec(),
        motive_valve=ProportionalValveSpec(r_vmin=DVP_R_VMIN),
        solenoid=BinaryValveSpec(),
        venturi=VenturiSpec(),
        cv_sensor=SensorSpec(range_max=CV_SENSOR_RANGE_KPA, seed=0),
        reservoir_sensor=SensorSpec(range_max=RESERVOIR_SENSOR_RANGE_KPA, seed=1),
    )


def proportional_valve_flow(u: float, dp: float, spec: ProportionalValveSpec) -> float:
    """Standard flow (std L/s) through a proportional valve at command u in [0, 1].

    Conductance is affine in command above the deadband u0 and reaches exactly
    1/r_vmin at u = 1. Flow follows the pressure difference sign.
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"valve command must be in [0, 1], got {u}")
    if u <= spec.u0:
        return 0.0
    frac = (u - spec.u0) / (1.0 - spec.u0)
    return (frac * dp) / spec.r_vmin


def venturi_vacuum_pressure(q_motive: float, spec: VenturiSpec) -> float:
    """Gauge pressure (kPa) at the vacuum node for a given motive flow."""
    if q_motive < 0.0:
        raise ValueError("q_motive must be non-negative")
    return spec.p_vac_floor * min(1.0, q_motive / spec.q_motive_rated)


def deflation_flow(
    p_cv: float, p_node: float, solenoid_open: bool, spec: BinaryValveSpec
) -> float:
    """Exhaust flow (std L/s) out of the control volume; never reverses."""
    if not solenoid_open:
        return 0.0
    return max(0.0, (p_cv - p_node) / spec.r_open)


def sensor_read(p_true: float, spec: SensorSpec, rng: np.random.Generator) -> float:
    """Measured gauge pressure: true value plus seeded noise, clamped to range."""
    value = p_true
    if spec.noise_std > 0.0:
        value += rng.normal(0.0, spec.noise_std)
    return min(max(value, PERFECT_VACUUM_KPA), spec.range_max)
