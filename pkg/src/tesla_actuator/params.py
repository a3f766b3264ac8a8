"""Physical parameter records for the turbine, the fluid torque map and the drivetrain.

All records are frozen dataclasses; use :func:`dataclasses.replace` to derive
modified copies (calibration does exactly that).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError

RPM_TO_RAD_S = 2.0 * math.pi / 60.0
RAD_S_TO_RPM = 60.0 / (2.0 * math.pi)

# structural limit of the printed rotor
MAX_TURBINE_RPM = 13000.0


def _require(cond, name, msg):
    if not cond:
        raise ConfigError(f"{name}: {msg}")


@dataclass(frozen=True)
class TurbineGeometry:
    disk_count: int = 6
    r1: float = 0.008       # exhaust port radius [m]
    r2: float = 0.0275      # outer disk radius [m]
    half_gap: float = 0.001  # half of the 2 mm spacer [m]

    @property
    def n_gaps(self) -> int:
        return self.disk_count - 1

    def validate(self, prefix="geometry"):
        _require(self.disk_count >= 2, f"{prefix}.disk_count", "need at least two disks (one gap)")
        _require(0.0 < self.r1 < self.r2, f"{prefix}.r1", "need 0 < r1 < r2")
        _require(self.half_gap > 0.0, f"{prefix}.half_gap", "must be > 0")
        return self


@dataclass(frozen=True)
class FluidTorqueParams:
    """Fluid constants and the piecewise-linear flow map ``h``.

    ``h(phi) = min(h_slope * (phi - h_deadband), h_sat)`` above the deadband and
    zero below it. Flow ``phi`` is expressed as a fraction of the valve's
    full-open flow at the reference pressure.
    """

    mu: float = 1.81e-5        # air at 20 C [Pa s]
    rho_gain: float = 1.0e-3   # [N m per unit h]
    h_deadband: float = 0.0
    h_slope: float = 1.0
    h_sat: float = 1.0

    def h(self, phi: float) -> float:
        if phi <= self.h_deadband:
            return 0.0
        return min(self.h_slope * (phi - self.h_deadband), self.h_sat)

    def validate(self, prefix="fluid"):
        _require(self.mu > 0.0, f"{prefix}.mu", "must be > 0")
        _require(self.rho_gain > 0.0, f"{prefix}.rho_gain", "must be > 0")
        _require(self.h_deadband >= 0.0, f"{prefix}.h_deadband", "must be >= 0")
        _require(self.h_slope > 0.0, f"{prefix}.h_slope", "must be > 0")
        _require(self.h_sat > 0.0, f"{prefix}.h_sat", "must be > 0")
        return self


@dataclass(frozen=True)
class MotorParams:
    """Rotor, friction, valve, gear and screw constants.

    ``valve_kappa`` is the flow fraction per volt; ``valve_u_full`` the voltage
    that fully opens the proportional valve; ``reference_pressure`` the supply
    pressure at which a fully open valve delivers flow fraction
    ``valve_kappa * valve_u_full``.
    """

    J: float = 7.0e-6            # [kg m^2]
    b: float = 7.5e-7            # [N m s/rad]
    c: float = 9.0e-5            # [N m]
    gear_ratio: float = 60.0
    screw_lead: float = 0.002    # [m/rev]
    screw_efficiency: float = 0.3
    screw_friction_force: float = 0.0  # static offset of the force chain [N]
    non_backdrivable: bool = True
    valve_kappa: float = 0.1     # [1/V]
    valve_u_full: float = 10.0   # [V]
    reference_pressure: float = 4.0  # [Bar]
    geometry: TurbineGeometry = field(default_factory=TurbineGeometry)
    fluid: FluidTorqueParams = field(default_factory=FluidTorqueParams)

    def validate(self, prefix="motor"):
        _require(self.J > 0.0, f"{prefix}.J", "must be > 0")
        _require(self.b >= 0.0, f"{prefix}.b", "must be >= 0")
        _require(self.c >= 0.0, f"{prefix}.c", "must be >= 0")
        _require(self.gear_ratio > 0.0, f"{prefix}.gear_ratio", "must be > 0")
        _require(self.screw_lead > 0.0, f"{prefix}.screw_lead", "must be > 0")
        _require(0.0 < self.screw_efficiency <= 1.0, f"{prefix}.screw_efficiency",
                 "must lie in (0, 1]")
        _require(self.screw_friction_force >= 0.0, f"{prefix}.screw_friction_force",
                 "must be >= 0")
        _require(self.valve_kappa > 0.0, f"{prefix}.valve_kappa", "must be > 0")
        _require(self.valve_u_full > 0.0, f"{prefix}.valve_u_full", "must be > 0")
        _require(self.reference_pressure > 0.0, f"{prefix}.reference_pressure", "must be > 0")
        for name in ("J", "b", "c", "screw_lead", "screw_efficiency", "valve_kappa"):
            _require(math.isfinite(getattr(self, name)), f"{prefix}.{name}", "must be finite")
        self.geometry.validate(f"{prefix}.geometry")
        self.fluid.validate(f"{prefix}.fluid")
        return self
