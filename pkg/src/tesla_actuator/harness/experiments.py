"""Bench experiments: speed/pressure sweep, stalled-force table and positioning runs."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from ..control import PidGains
from ..drivetrain import LoadModel, stall_force
from ..params import MotorParams
from ..turbine_model import steady_state_speed
from .runner import run_scenario
from .scenario import Scenario
from .trace import TraceSample

SETTLE_BAND_MM = 0.5
SETTLE_HOLD_S = 2.0

# published stalled-force measurements [Bar, N]
TABLE_I = ((1.5, 11.49), (2.0, 22.05), (2.5, 29.38), (3.0, 36.01))


def speed_pressure_sweep(motor: MotorParams, pressures: Sequence[float]) -> list[tuple[float, float]]:
    """Steady free-running speed [RPM] for each supply pressure [Bar]."""
    return [(float(p), steady_state_speed(p, motor)) for p in pressures]


def force_table(motor: MotorParams, pressures: Sequence[float] = tuple(p for p, _ in TABLE_I),
                ) -> list[tuple[float, float]]:
    """Stalled-slide axial force [N] for each supply pressure [Bar]."""
    rows = []
    for p in pressures:
        steady_state_speed(p, motor)  # range check only
        rows.append((float(p), stall_force(p, motor)))
    return rows


@dataclass(frozen=True)
class PositioningSpec:
    """Target schedule for :func:`positioning_experiment`.

    Build one with :meth:`single_step`, :meth:`incremental` or :meth:`ramp_to`.
    """

    targets: tuple = ()
    ramp: bool = False
    duration: float = 60.0
    load: LoadModel | None = None
    settle_band: float = SETTLE_BAND_MM
    settle_hold: float = SETTLE_HOLD_S

    @classmethod
    def single_step(cls, distance, duration=60.0, **kw):
        return cls(targets=((0.0, float(distance)),), duration=duration, **kw)

    @classmethod
    def incremental(cls, step, count, dwell=15.0, **kw):
        targets = tuple((i * dwell, step * (i + 1)) for i in range(count))
        return cls(targets=targets, duration=count * dwell, **kw)

    @classmethod
    def ramp_to(cls, distance, speed, hold=20.0, **kw):
        """Ramp from 0 at ``speed`` mm/s, then hold the end point."""
        t_end = abs(distance) / speed
        return cls(targets=((0.0, 0.0), (t_end, float(distance))), ramp=True,
                   duration=t_end + hold, **kw)


@dataclass(frozen=True)
class PositioningRow:
    target: float          # [mm]
    final_error: float     # [mm] measured - target at the end of the segment
    peak_overshoot: float  # [mm] beyond the target in the direction of travel, >= 0
    settle_time: float     # [s] from segment start; math.inf if never settled


def summarize(trace: Sequence[TraceSample], targets, band=SETTLE_BAND_MM, hold=SETTLE_HOLD_S,
              start_position=0.0) -> list[PositioningRow]:
    """Per-target summary of a step-schedule trace."""
    if not targets or not trace:
        return []
    rows = []
    t_end = trace[-1].t + (trace[1].t - trace[0].t if len(trace) > 1 else 0.0)
    prev_target = start_position
    for i, (t0, target) in enumerate(targets):
        t1 = targets[i + 1][0] if i + 1 < len(targets) else t_end
        seg = [s for s in trace if t0 <= s.t < t1]
        if not seg:
            continue
        sign = 1.0 if target >= prev_target else -1.0
        overshoot = max(0.0, max(sign * s.error for s in seg))
        settle = math.inf
        inside_since = None
        for s in seg:
            if abs(s.error) < band:
                if inside_since is None:
                    inside_since = s.t
                if s.t - inside_since >= hold:
                    settle = inside_since - t0
                    break
            else:
                inside_since = None
        rows.append(PositioningRow(target, seg[-1].error, overshoot, settle))
        prev_target = target
    return rows


def positioning_experiment(motor: MotorParams, gains: PidGains, spec: PositioningSpec,
                           base: Scenario | None = None) -> list[PositioningRow]:
    """Run the schedule in ``spec`` closed loop and summarise each target."""
    if not spec.targets:
        return []
    base = base or Scenario()
    scenario = replace(base, motor=motor, gains=gains, targets=tuple(spec.targets), ramp=spec.ramp,
                       duration=spec.duration, load=spec.load or base.load)
    trace = run_scenario(scenario)
    if spec.ramp:
        # a ramp is judged against its end point only
        end = spec.targets[-1]
        return summarize(trace, [end], spec.settle_band, spec.settle_hold,
                         start_position=scenario.initial_position)
    return summarize(trace, spec.targets, spec.settle_band, spec.settle_hold,
                     start_position=scenario.initial_position)


def peak_overshoot(rows: Sequence[PositioningRow]) -> float:
    return max((r.peak_overshoot for r in rows), default=0.0)
