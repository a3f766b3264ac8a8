"""Optical rotary encoder on the gearbox output shaft.

The encoder sits after the 1:60 reduction; the turbine shaft itself spins too
fast for pulse counting.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError, InsufficientDataError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class EncoderConfig:
    pulses_per_rev: int = 360
    quadrature: bool = True

    @property
    def quantum(self) -> float:
        return TWO_PI / self.pulses_per_rev

    def validate(self, prefix="encoder"):
        if not (isinstance(self.pulses_per_rev, int) and self.pulses_per_rev >= 1):
            raise ConfigError(f"{prefix}.pulses_per_rev: must be an integer >= 1")
        return self


@dataclass(frozen=True)
class EncoderState:
    count: int = 0
    last_angle: float = 0.0
    aliasing: bool = False  # set when the last sample violated |d angle| < pi


def _slot(angle, ppr):
    # index of the pulse slot containing angle; the epsilon keeps exact grid
    # points from falling one slot short through rounding
    return math.floor(angle * ppr / TWO_PI + 1e-9)


def sample_encoder(true_angle_out: float, cfg: EncoderConfig, state: EncoderState,
                   direction_hint: int = 1) -> tuple[EncoderState, float]:
    """Count the pulse edges crossed since the previous sample.

    With quadrature the count follows the shaft in both directions. A
    single-channel encoder cannot tell direction; its edges are added with
    the sign of ``direction_hint`` (the commanded solenoid direction).
    Returns the new state and the measured angle ``count * 2 pi / ppr``.
    """
    ppr = cfg.pulses_per_rev
    edges = _slot(true_angle_out, ppr) - _slot(state.last_angle, ppr)
    if cfg.quadrature:
        count = state.count + edges
    else:
        count = state.count + (1 if direction_hint >= 0 else -1) * abs(edges)
    aliased = abs(true_angle_out - state.last_angle) >= math.pi
    new = EncoderState(count=count, last_angle=true_angle_out, aliasing=aliased)
    return new, count * TWO_PI / ppr


def estimate_velocity(samples: Sequence[tuple[float, float]], window: float) -> float:
    """Backward-difference velocity [rad/s] from ``(t, measured_angle)`` samples.

    Uses the newest sample and the most recent one at least ``window`` older
    (or the oldest available). Measured angles are already unwrapped counts,
    so no phase unwrapping is needed.
    """
    if len(samples) < 2:
        raise InsufficientDataError("velocity estimate needs at least two samples")
    t1, a1 = samples[-1]
    t0, a0 = samples[0]
    for t, a in reversed(samples[:-1]):
        if t1 - t >= window * (1.0 - 1e-9):
            t0, a0 = t, a
            break
    if t1 <= t0:
        raise InsufficientDataError("velocity window spans no time")
    if a1 == a0:
        return 0.0
    return (a1 - a0) / (t1 - t0)


class VelocityEstimator:
    """Streaming form of :func:`estimate_velocity` for a fixed sample period."""

    def __init__(self, window: float, dt: float):
        self.n = max(1, int(round(window / dt)))
        self.dt = dt
        self._angles = deque(maxlen=self.n + 1)

    def __call__(self, measured_angle: float) -> float:
        self._angles.append(measured_angle)
        if len(self._angles) < 2:
            return 0.0
        a0 = self._angles[0]
        if measured_angle == a0:
            return 0.0
        return (measured_angle - a0) / ((len(self._angles) - 1) * self.dt)
