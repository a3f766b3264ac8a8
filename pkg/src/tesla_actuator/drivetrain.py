"""Rotor dynamics with Coulomb stiction, the 1:60 worm reduction, the power screw
and the needle/tissue load."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, EvaluationError, InsufficientDataError
from .params import MotorParams
from .turbine_model import full_open_torque

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class RotorState:
    q: float = 0.0      # turbine shaft angle [rad]
    q_dot: float = 0.0  # [rad/s]


@dataclass(frozen=True)
class LoadModel:
    """Axial load on the slide.

    ``resistive_force`` and ``viscous_load`` model needle/tissue interaction:
    they only oppose motion and vanish at rest. ``external_force`` is a
    constant axial push along -x (e.g. a hand pressing on the needle); it acts
    even at rest and is what the worm gear has to hold.
    """

    mode: str = "free_space"       # or "phantom"
    entry_depth: float = 0.0       # [m]
    resistive_force: float = 2.0   # [N]
    viscous_load: float = 0.0      # [N s/m]
    external_force: float = 0.0    # [N]

    def validate(self, prefix="load"):
        if self.mode not in ("free_space", "phantom"):
            raise ConfigError(f"{prefix}.mode: must be 'free_space' or 'phantom'")
        if not self.resistive_force >= 0.0:
            raise ConfigError(f"{prefix}.resistive_force: must be >= 0")
        if not self.viscous_load >= 0.0:
            raise ConfigError(f"{prefix}.viscous_load: must be >= 0")
        if not math.isfinite(self.external_force):
            raise ConfigError(f"{prefix}.external_force: must be finite")
        if not math.isfinite(self.entry_depth):
            raise ConfigError(f"{prefix}.entry_depth: must be finite")
        return self


def _sgn(x):
    return 1.0 if x > 0.0 else (-1.0 if x < 0.0 else 0.0)


def step_dynamics(state: RotorState, tau_drive: float, tau_load: float, params: MotorParams,
                  dt: float) -> RotorState:
    """Advance ``J q'' = -b q' - c sgn(q') + tau_L + tau`` by one semi-implicit Euler step.

    From rest the rotor only breaks away if ``|tau + tau_L| > c``. A moving
    rotor whose velocity would change sign within the step is stopped at
    zero instead; it may break away again on the next step.
    """
    if not (math.isfinite(tau_drive) and math.isfinite(tau_load)):
        raise EvaluationError(f"non-finite torque (drive={tau_drive!r}, load={tau_load!r})")
    if not 0.0 < dt <= 0.01:
        raise ConfigError("dt: must lie in (0, 10 ms]")

    net = tau_drive + tau_load
    w = state.q_dot
    if w == 0.0:
        if abs(net) <= params.c:
            return state
        w_new = dt * (net - params.c * _sgn(net)) / params.J
    else:
        acc = (-params.b * w - params.c * _sgn(w) + net) / params.J
        w_new = w + dt * acc
        if w_new * w <= 0.0:
            w_new = 0.0
    return RotorState(state.q + dt * w_new, w_new)


def gearbox_out(omega_turbine, ratio: float = 60.0):
    """Output-shaft speed (or angle) of the worm reduction; any consistent units."""
    return omega_turbine / ratio


def gearbox_in(omega_out, ratio: float = 60.0):
    return omega_out * ratio


def backdrive_filter(tau_from_load_side: float, params: MotorParams) -> float:
    """Load-side torque that actually reaches the turbine shaft."""
    if params.non_backdrivable:
        return 0.0
    return tau_from_load_side


def screw_position(q_out: float, lead: float) -> float:
    """Slide travel [m] for an output-shaft angle [rad]."""
    return q_out / TWO_PI * lead


def screw_angle(x: float, lead: float) -> float:
    """Inverse of :func:`screw_position`."""
    return x / lead * TWO_PI


def axial_force(tau_out: float, lead: float, efficiency: float) -> float:
    """Thrust [N] produced by a screw driven with ``tau_out`` [N m]."""
    return TWO_PI * efficiency * tau_out / lead


def screw_torque_for_force(force: float, lead: float, efficiency: float) -> float:
    """Output-shaft torque needed to push against an axial ``force``."""
    return force * lead / (TWO_PI * efficiency)


def tissue_load(x: float, x_dot: float, model: LoadModel) -> float:
    """Axial force [N] opposing the slide; signed against ``x_dot``."""
    if model.mode == "free_space" or x < model.entry_depth or x_dot == 0.0:
        return 0.0
    return -(model.resistive_force * _sgn(x_dot) + model.viscous_load * x_dot)


def reflected_load_torque(force: float, params: MotorParams) -> float:
    """Turbine-side torque equivalent of an axial force acting on the slide."""
    tau_out = screw_torque_for_force(force, params.screw_lead, params.screw_efficiency)
    return tau_out / params.gear_ratio


def stall_force(supply_pressure: float, params: MotorParams) -> float:
    """Axial force [N] of the stalled slide with the valve fully open.

    The turbine's Coulomb friction absorbs up to ``c`` of the driving torque;
    the rest is multiplied by the gearbox and converted by the screw, minus
    the screw's static friction force. Never negative.
    """
    tau = full_open_torque(supply_pressure, params)
    tau_out = params.gear_ratio * max(tau - params.c, 0.0)
    force = axial_force(tau_out, params.screw_lead, params.screw_efficiency)
    return max(force - params.screw_friction_force, 0.0)


@dataclass(frozen=True)
class ForceCalibration:
    screw_efficiency: float
    screw_friction_force: float  # [N]
    residual_rms: float          # [N]


def calibrate_force_chain(rows: Sequence[tuple[float, float]], params: MotorParams) -> ForceCalibration:
    """Least-squares affine fit of screw efficiency and friction offset to (pressure, force) rows.

    The torque map in ``params`` must already be calibrated; with two rows
    the fit is exact.
    """
    rows = [(float(p), float(f)) for p, f in rows]
    if len({p for p, _ in rows}) < 2:
        raise InsufficientDataError("need force rows at two or more distinct pressures")
    # force = eff * k(p) - offset, k(p) = ideal thrust per unit efficiency
    k = np.array([axial_force(params.gear_ratio * max(full_open_torque(p, params) - params.c, 0.0),
                              params.screw_lead, 1.0) for p, _ in rows])
    f = np.array([force for _, force in rows])
    A = np.column_stack([k, -np.ones_like(k)])
    (eff, offset), *_ = np.linalg.lstsq(A, f, rcond=None)
    if not 0.0 < eff <= 1.0:
        raise ConfigError(
            f"fitted screw efficiency {eff:.4g} outside (0, 1]; recalibrate the torque map")
    if offset < 0.0:
        offset = 0.0
        eff = float(np.dot(k, f) / np.dot(k, k))
    resid = A @ np.array([eff, offset]) - f
    return ForceCalibration(float(eff), float(offset), float(np.sqrt(np.mean(resid ** 2))))
