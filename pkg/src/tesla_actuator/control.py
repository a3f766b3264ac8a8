"""Discrete PID position loop, valve command shaping and pneumatic transport delay.

The controller output is a signed voltage. :class:`CommandShaper` turns it into
a non-negative proportional-valve voltage plus a solenoid direction, and
:class:`DelayLine` holds each command back for the time the air needs to travel
down the supply tubes.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class PidGains:
    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    u_max: float = 10.0
    integral_clamp: float = 2.0

    def validate(self, prefix="gains"):
        for name in ("kp", "ki", "kd"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ConfigError(f"{prefix}.{name}: must be a finite value >= 0")
        if not self.u_max > 0.0:
            raise ConfigError(f"{prefix}.u_max: must be > 0")
        if not 0.0 <= self.integral_clamp <= self.u_max:
            raise ConfigError(f"{prefix}.integral_clamp: must lie in [0, u_max]")
        return self


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float | None = None


@dataclass(frozen=True)
class ValveCommand:
    u: float = 0.0
    direction: int = 1
    kappa: float = 0.1


@dataclass(frozen=True)
class ActuationLimits:
    min_effective_pressure: float = 0.5  # [Bar]
    max_pressure: float = 4.0            # [Bar]
    max_turbine_rpm: float = 13000.0
    solenoid_switch_time: float = 0.02   # [s]
    tube_delay: float = 0.03             # [s]

    def validate(self, prefix="limits"):
        if not 0.0 <= self.min_effective_pressure < self.max_pressure:
            raise ConfigError(f"{prefix}.min_effective_pressure: must lie in [0, max_pressure)")
        if not self.max_turbine_rpm > 0.0:
            raise ConfigError(f"{prefix}.max_turbine_rpm: must be > 0")
        if not self.solenoid_switch_time >= 0.0:
            raise ConfigError(f"{prefix}.solenoid_switch_time: must be >= 0")
        if not self.tube_delay >= 0.0:
            raise ConfigError(f"{prefix}.tube_delay: must be >= 0")
        return self


def pid_step(gains: PidGains, state: PidState, q: float, q_d: float, q_dot: float,
             dt: float) -> tuple[float, PidState]:
    """One PID update; returns ``(u_signed, new_state)``.

    All three terms oppose the error ``e = q - q_d``; the derivative term acts
    on the measured velocity, not on the error. The integral accumulates by the
    trapezoidal rule and is frozen whenever the unsaturated output exceeds
    ``u_max`` and integrating would push it further out.
    """
    e = q - q_d
    prev = e if state.prev_error is None else state.prev_error
    candidate = state.integral + 0.5 * (e + prev) * dt

    if gains.ki > 0.0:
        limit = gains.integral_clamp / gains.ki
        candidate = min(max(candidate, -limit), limit)

    u_trial = -gains.kp * e - gains.ki * candidate - gains.kd * q_dot
    if abs(u_trial) > gains.u_max and abs(candidate) > abs(state.integral):
        # anti-windup: keep the previous integral while saturated
        integral = state.integral
    else:
        integral = candidate

    u = -gains.kp * e - gains.ki * integral - gains.kd * q_dot
    return u, PidState(integral=integral, prev_error=e)


@dataclass(frozen=True)
class ShaperState:
    direction: int = 1
    pending: int = 0          # direction being switched to, 0 if idle
    switch_left: float = 0.0  # [s] remaining solenoid travel time


def shape_command(u_signed: float, limits: ActuationLimits, state: ShaperState, dt: float,
                  u_max: float, kappa: float = 0.1) -> tuple[ValveCommand, ShaperState]:
    """Split a signed controller output into valve voltage and solenoid direction.

    A sign change starts a solenoid switch lasting ``solenoid_switch_time``;
    the valve voltage is forced to zero until it completes. Commands too weak
    to overcome stiction are passed through unchanged; the plant simply does
    not move.
    """
    direction, pending, left = state.direction, state.pending, state.switch_left
    wanted = 0 if u_signed == 0.0 else (1 if u_signed > 0.0 else -1)

    if pending and wanted == direction:
        # reverted before the solenoid finished moving
        pending, left = 0, 0.0
    elif not pending and wanted and wanted != direction:
        pending, left = wanted, limits.solenoid_switch_time

    if pending:
        if left > 1e-12:
            return ValveCommand(0.0, direction, kappa), ShaperState(direction, pending, left - dt)
        direction, pending = pending, 0

    u = min(abs(u_signed), u_max)
    return ValveCommand(u, direction, kappa), ShaperState(direction, 0, 0.0)


class CommandShaper:
    """Stateful wrapper around :func:`shape_command`."""

    def __init__(self, limits: ActuationLimits, u_max: float, kappa: float = 0.1, direction: int = 1):
        self.limits = limits
        self.u_max = u_max
        self.kappa = kappa
        self.state = ShaperState(direction=direction)

    def __call__(self, u_signed: float, dt: float) -> ValveCommand:
        cmd, self.state = shape_command(u_signed, self.limits, self.state, dt, self.u_max, self.kappa)
        return cmd


class DelayLine:
    """Fixed-length FIFO: a command pushed at step k comes out at step k + n.

    ``n = round(tube_delay / dt)``; before the first command arrives the line
    emits ``initial``.
    """

    def __init__(self, tube_delay: float, dt: float, initial=None):
        if tube_delay < 0.0:
            raise ConfigError("limits.tube_delay: must be >= 0")
        self.steps = int(round(tube_delay / dt))
        self._buf = deque([initial] * self.steps, maxlen=self.steps + 1)

    def __call__(self, cmd):
        if self.steps == 0:
            return cmd
        self._buf.append(cmd)
        return self._buf.popleft()


def delay_line(cmds, tube_delay: float, dt: float, initial=None) -> list:
    """Delay a whole command stream sampled every ``dt``."""
    line = DelayLine(tube_delay, dt, initial)
    return [line(c) for c in cmds]
