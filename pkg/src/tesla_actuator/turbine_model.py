"""Driving torque of the bladeless turbine.

Two routes are provided:

* :func:`shear_torque` integrates the wall shear of a parabolic inter-disk
  velocity profile over the disk radius, summed over all gaps.
* :func:`flow_to_torque` is the calibrated control-oriented map
  ``tau = i * rho * h(kappa * u)``, with the flow additionally scaled by the
  supply pressure.

:func:`steady_state_speed` and :func:`calibrate_torque_map` tie the map to the
free-running speed/pressure behaviour of the motor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import minimize_scalar

from .control import ValveCommand
from .errors import EvaluationError, InsufficientDataError, RangeError
from .params import RAD_S_TO_RPM, FluidTorqueParams, MotorParams, TurbineGeometry

MAX_SUPPLY_PRESSURE = 4.0  # [Bar]


@dataclass(frozen=True)
class VelocityProfile:
    """Tangential fluid speed at mid-gap as a function of radius.

    Across the gap the profile is parabolic,
    ``v(y) = v_peak * (1 - (y / half_gap)**2)``, so the wall shear slope is
    ``2 * v_peak / half_gap``.
    """

    peak_velocity_at: Callable[[float], float]

    @classmethod
    def constant(cls, v):
        return cls(lambda r: v)

    @classmethod
    def linear(cls, v_tip, r_tip):
        """Solid-body-like ramp reaching ``v_tip`` at radius ``r_tip``."""
        return cls(lambda r: v_tip * r / r_tip)

    def across_gap(self, r, y, half_gap):
        return self.peak_velocity_at(r) * (1.0 - (y / half_gap) ** 2)

    @staticmethod
    def wall_shear_slope(v_peak, half_gap):
        return 2.0 * v_peak / half_gap


def shear_torque(geom: TurbineGeometry, params: FluidTorqueParams, profile: VelocityProfile,
                 nodes: int = 101) -> float:
    """Shear torque ``n * mu * integral(dv/dy at the wall, r = r1..r2)`` [N m].

    The integral is evaluated with composite Simpson quadrature; ``nodes`` is
    rounded up to the next odd number so the rule needs no end correction.
    """
    if nodes < 101:
        raise ValueError("at least 101 quadrature nodes are required")
    if nodes % 2 == 0:
        nodes += 1
    r = np.linspace(geom.r1, geom.r2, nodes)
    v = np.empty(nodes)
    for k, rk in enumerate(r):
        vk = float(profile.peak_velocity_at(float(rk)))
        if not math.isfinite(vk):
            raise EvaluationError(f"velocity profile is not finite at r = {float(rk)!r} m")
        v[k] = vk
    slope = VelocityProfile.wall_shear_slope(v, geom.half_gap)
    return geom.n_gaps * params.mu * float(simpson(slope, x=r))


def flow_fraction(u: float, kappa: float, pressure_ratio: float = 1.0) -> float:
    """Flow as a fraction of the valve's full-open flow at the reference pressure."""
    return kappa * u * pressure_ratio


def flow_to_torque(cmd: ValveCommand, params: FluidTorqueParams, kappa: float | None = None,
                   pressure_ratio: float = 1.0) -> float:
    """Signed driving torque ``i * rho * h(kappa * u * p / p_ref)`` [N m].

    ``kappa`` defaults to the gain carried by the command itself.
    """
    k = cmd.kappa if kappa is None else kappa
    return cmd.direction * params.rho_gain * params.h(flow_fraction(cmd.u, k, pressure_ratio))


def full_open_torque(supply_pressure: float, motor: MotorParams) -> float:
    """Driving torque with the proportional valve fully open."""
    cmd = ValveCommand(u=motor.valve_u_full, direction=1, kappa=motor.valve_kappa)
    return flow_to_torque(cmd, motor.fluid, pressure_ratio=supply_pressure / motor.reference_pressure)


def _check_pressure(p):
    if not (0.0 <= p <= MAX_SUPPLY_PRESSURE):
        raise RangeError(
            f"supply pressure {p!r} Bar outside [0, {MAX_SUPPLY_PRESSURE}] Bar "
            "(rotor deforms above 13000 RPM)")


def steady_state_speed(supply_pressure: float, motor: MotorParams) -> float:
    """Free-running turbine speed [RPM] at a given supply pressure.

    Solves ``b * w + c = tau(p)``. Returns 0 when the driving torque cannot
    break the Coulomb friction.
    """
    _check_pressure(supply_pressure)
    tau = full_open_torque(supply_pressure, motor)
    if tau <= motor.c:
        return 0.0
    if motor.b <= 0.0:
        raise EvaluationError("no viscous friction: steady-state speed is unbounded")

    return (tau - motor.c) / motor.b * RAD_S_TO_RPM


def _unclipped_speed(supply_pressure, motor):
    # signed solution of b*w + c = tau without the stiction clamp [RPM]
    tau = full_open_torque(supply_pressure, motor)
    return (tau - motor.c) / motor.b * RAD_S_TO_RPM


def _minimize(f: Callable[[float], float], lo: float, hi: float, xatol: float) -> float:
    res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                          options={"xatol": xatol, "maxiter": 500})
    return float(res.x)


@dataclass(frozen=True)
class TorqueCalibration:
    fluid: FluidTorqueParams
    residual_rms: float  # [RPM]


def calibrate_torque_map(observations: Sequence[tuple[float, float]], motor: MotorParams,
                         ) -> TorqueCalibration:
    """Fit ``rho_gain`` and ``h_deadband`` to (pressure [Bar], steady speed [RPM]) data.

    Minimises the sum of squared RPM residuals with nested bounded scalar
    searches: deadband outside, log(rho) inside. Zero-speed points are
    predicted through the stiction clamp. When only one pressure shows motion
    the fit is underdetermined; the highest zero-speed point is then read as
    the breakaway pressure and predicted without the clamp, so the fitted
    torque there equals the Coulomb friction.
    """
    obs = [(float(p), float(w)) for p, w in observations]
    if len({p for p, _ in obs}) < 2:
        raise InsufficientDataError("need observations at two or more distinct pressures")
    for p, _ in obs:
        _check_pressure(p)
    stalled = [p for p, w in obs if w == 0.0]
    moving = {p for p, w in obs if w != 0.0}
    # with a single moving pressure the two parameters are underdetermined;
    # the highest stall point then supplies the second equation
    breakaway = max(stalled) if stalled and len(moving) < 2 else None

    full_flow = motor.valve_kappa * motor.valve_u_full / motor.reference_pressure
    if breakaway is not None:
        dead_hi = full_flow * breakaway
    else:
        dead_hi = full_flow * min(moving or {p for p, _ in obs})

    def sse(fluid):
        m = replace(motor, fluid=fluid)
        total = 0.0
        for p, w in obs:
            pred = _unclipped_speed(p, m) if p == breakaway else steady_state_speed(p, m)
            total += (pred - w) ** 2
        return total

    p_top = max(moving) if moving else max(p for p, _ in obs)

    def best_rho(dead):
        base = replace(motor.fluid, h_deadband=dead)
        # below this gain every point is stalled and the objective is flat
        h_top = base.h(full_flow * p_top)
        log_lo = math.log(max(motor.c, 1e-12) / h_top)
        log_hi = log_lo + 6.0 * math.log(10.0)
        lr = _minimize(lambda x: sse(replace(base, rho_gain=math.exp(x))), log_lo, log_hi, 1e-12)
        return math.exp(lr)

    def outer(dead):
        return sse(replace(motor.fluid, h_deadband=dead, rho_gain=best_rho(dead)))

    dead = _minimize(outer, 0.0, dead_hi * (1.0 - 1e-9), 1e-12)
    fluid = replace(motor.fluid, h_deadband=dead, rho_gain=best_rho(dead))
    rms = math.sqrt(sse(fluid) / len(obs))
    return TorqueCalibration(fluid=fluid.validate(), residual_rms=rms)
