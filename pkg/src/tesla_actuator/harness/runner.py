"""Closed-loop simulation of the needle-insertion stage.

Per time step ``t_k = k * dt``:

1. the encoder samples the true output-shaft angle; the slide position and
   its velocity estimate are derived from the counts;
2. the PID computes a signed voltage against the scheduled target;
3. the shaper splits it into valve voltage and solenoid direction;
4. the delay line releases the command issued one tube delay earlier;
5. the torque map converts the delayed command into driving torque;
6. the axial load is reflected to the turbine shaft and the rotor is
   advanced to ``t_{k+1}``.

The recorded sample holds the state at ``t_k`` and the inputs applied over
``[t_k, t_{k+1})``.
"""

from __future__ import annotations

import math

import numpy as np

from ..control import CommandShaper, DelayLine, PidState, ValveCommand, pid_step
from ..drivetrain import (
    RotorState, backdrive_filter, reflected_load_torque, screw_position, step_dynamics, tissue_load,
)
from ..errors import EvaluationError, NumericalError
from ..params import RAD_S_TO_RPM
from ..sensing import EncoderState, VelocityEstimator, sample_encoder
from ..turbine_model import flow_to_torque
from .scenario import Scenario
from .trace import ALIASING, SPEED_LIMIT, TraceSample


def load_torque(x_m: float, x_dot: float, rotor_speed: float, scenario: Scenario) -> tuple[float, float]:
    """Axial force on the slide [N] and the torque it puts on the turbine [N m].

    Tissue resistance always opposes motion and is transmitted. The constant
    external force is transmitted only while it resists an ongoing motion;
    otherwise it would drive the gear from the load side, which the
    self-locking worm blocks.
    """
    motor = scenario.motor
    f_tissue = tissue_load(x_m, x_dot, scenario.load)
    f_ext = -scenario.load.external_force
    tau = reflected_load_torque(f_tissue, motor)
    tau_ext = reflected_load_torque(f_ext, motor)
    if rotor_speed != 0.0 and tau_ext * rotor_speed < 0.0:
        tau += tau_ext
    else:
        tau += backdrive_filter(tau_ext, motor)
    return f_tissue + f_ext, tau


def run_scenario(scenario: Scenario) -> list[TraceSample]:
    """Simulate ``scenario`` and return one :class:`TraceSample` per step."""
    s = scenario.validate()
    motor, limits, enc_cfg = s.motor, s.limits, s.encoder
    dt = s.dt
    n_steps = int(round(s.duration / dt))
    lead, ratio = motor.screw_lead, motor.gear_ratio
    kappa = motor.valve_kappa
    rpm_cap = limits.max_turbine_rpm

    rng = np.random.default_rng(s.seed)
    if s.pressure_noise > 0.0:
        ripple = rng.normal(0.0, s.pressure_noise, n_steps)
    else:
        ripple = None

    x0_m = s.initial_position * 1e-3
    q0 = x0_m / lead * 2.0 * math.pi * ratio
    rotor = RotorState(q=q0, q_dot=0.0)
    enc = EncoderState(count=0, last_angle=q0 / ratio)
    enc_offset_mm = s.initial_position

    pid = PidState()
    shaper = CommandShaper(limits, s.gains.u_max, kappa)
    delay = DelayLine(limits.tube_delay, dt, ValveCommand(0.0, 1, kappa))
    velocity = VelocityEstimator(s.velocity_window, dt)
    mm_per_rad = lead / (2.0 * math.pi) * 1e3

    trace = []
    for k in range(n_steps):
        t = k * dt
        q_out = rotor.q / ratio
        x_m = screw_position(q_out, lead)
        x_dot = rotor.q_dot / ratio / (2.0 * math.pi) * lead

        enc, measured = sample_encoder(q_out, enc_cfg, enc, direction_hint=shaper.state.direction)
        x_meas = enc_offset_mm + measured * mm_per_rad
        v_meas = velocity(measured) * mm_per_rad

        target = s.target_at(t)
        u_signed, pid = pid_step(s.gains, pid, x_meas, target, v_meas, dt)
        cmd = delay(shaper(u_signed, dt))

        pressure = s.supply_pressure
        if ripple is not None:
            pressure = min(max(pressure + float(ripple[k]), 0.0), limits.max_pressure)
        tau_drive = flow_to_torque(cmd, motor.fluid, pressure_ratio=pressure / motor.reference_pressure)
        force, tau_load = load_torque(x_m, x_dot, rotor.q_dot, s)

        rpm = rotor.q_dot * RAD_S_TO_RPM
        flags = set()
        if abs(rpm) > rpm_cap:
            flags.add(SPEED_LIMIT)
        if enc.aliasing:
            flags.add(ALIASING)
        trace.append(TraceSample(t, rotor.q, rpm, q_out, x_m * 1e3, enc.count, cmd.u, cmd.direction,
                                 tau_drive, tau_load, force, x_meas - target, frozenset(flags)))

        try:
            rotor = step_dynamics(rotor, tau_drive, tau_load, motor, dt)
        except EvaluationError as exc:
            raise NumericalError(str(exc), len(trace) - 1) from exc
        if not (math.isfinite(rotor.q) and math.isfinite(rotor.q_dot)):
            raise NumericalError(f"rotor state became non-finite at t = {t + dt!r} s", len(trace) - 1)
    return trace
