"""Scenario records and the YAML config loader.

A scenario file is a YAML mapping with nested sections mirroring the record
fields::

    include: builtin:prototype        # or a path relative to this file
    label: step-32mm
    run: {dt: 0.0005, duration: 60, supply_pressure: 3.0}
    targets: [[0.0, 32.0]]
    load: {mode: phantom, entry_depth: 0.005}

``include`` files are merged first, then overridden key by key (nested
mappings merge recursively, everything else replaces). A ``calibration``
section triggers a fit of the torque map and of the force chain when the
motor is built.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from ..control import ActuationLimits, PidGains
from ..drivetrain import LoadModel, calibrate_force_chain
from ..errors import ConfigError
from ..params import FluidTorqueParams, MotorParams, TurbineGeometry
from ..sensing import EncoderConfig
from ..turbine_model import calibrate_torque_map

BUILTIN_PREFIX = "builtin:"


@dataclass(frozen=True)
class Scenario:
    motor: MotorParams = field(default_factory=MotorParams)
    gains: PidGains = field(default_factory=PidGains)
    limits: ActuationLimits = field(default_factory=ActuationLimits)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    load: LoadModel = field(default_factory=LoadModel)
    dt: float = 0.0005
    duration: float = 10.0
    targets: tuple = ((0.0, 0.0),)  # (time [s], target [mm]) breakpoints
    ramp: bool = False              # interpolate between breakpoints
    seed: int = 0
    label: str = "scenario"
    supply_pressure: float = 3.0    # [Bar]
    pressure_noise: float = 0.0     # std of supply ripple [Bar], seeded
    velocity_window: float = 0.02   # [s]
    initial_position: float = 0.0   # [mm]

    def validate(self):
        self.motor.validate()
        self.gains.validate()
        self.limits.validate()
        self.encoder.validate()
        self.load.validate()
        if not (math.isfinite(self.dt) and 0.0 < self.dt <= 0.01):
            raise ConfigError("run.dt: must lie in (0, 0.01] s")
        if not (math.isfinite(self.duration) and self.duration > 0.0):
            raise ConfigError("run.duration: must be > 0")
        if not self.targets:
            raise ConfigError("targets: must not be empty")
        times = [t for t, _ in self.targets]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ConfigError("targets: times must be non-decreasing")
        if not all(math.isfinite(t) and math.isfinite(x) for t, x in self.targets):
            raise ConfigError("targets: entries must be finite")
        if not 0.0 <= self.supply_pressure <= self.limits.max_pressure:
            raise ConfigError("run.supply_pressure: must lie in [0, limits.max_pressure]")
        if not self.pressure_noise >= 0.0:
            raise ConfigError("run.pressure_noise: must be >= 0")
        if not self.velocity_window >= self.dt:
            raise ConfigError("run.velocity_window: must be >= dt")
        return self

    def target_at(self, t: float) -> float:
        """Target position [mm] at time ``t``."""
        pts = self.targets
        if t < pts[0][0]:
            return self.initial_position
        if not self.ramp:
            current = pts[0][1]
            for tk, xk in pts:
                if tk <= t:
                    current = xk
                else:
                    break
            return current
        for (t0, x0), (t1, x1) in zip(pts, pts[1:]):
            if t0 <= t < t1:
                return x0 + (x1 - x0) * (t - t0) / (t1 - t0)
        return pts[-1][1]


# ---------------------------------------------------------------------------
# YAML loading

def deep_merge(base: Mapping, override: Mapping) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def _read_yaml(text, origin):
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{origin}: not valid YAML ({exc})") from exc
    if data is None:
        return {}
    if not isinstance(data, Mapping):
        raise ConfigError(f"{origin}: top level must be a mapping")
    return dict(data)


def _builtin_text(name):
    try:
        return resources.files("tesla_actuator.harness").joinpath("fixtures").joinpath(f"{name}.yaml").read_text()
    except FileNotFoundError as exc:
        raise ConfigError(f"include: unknown builtin fixture {name!r}") from exc


def load_mapping(source: str | Path, _seen=None) -> dict:
    """Read a config file (or ``builtin:<name>``) and resolve its includes."""
    seen = set() if _seen is None else _seen
    src = str(source)
    if src.startswith(BUILTIN_PREFIX):
        key, text, base_dir = src, _builtin_text(src[len(BUILTIN_PREFIX):]), None
    else:
        path = Path(src).resolve()
        key, base_dir = str(path), path.parent
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {src}: {exc}") from exc
    if key in seen:
        raise ConfigError(f"include: cycle through {src}")
    seen.add(key)

    data = _read_yaml(text, src)
    includes = data.pop("include", [])
    if isinstance(includes, str):
        includes = [includes]
    merged: dict = {}
    for inc in includes:
        inc = str(inc)
        if not inc.startswith(BUILTIN_PREFIX):
            if base_dir is None:
                raise ConfigError(f"include: builtin fixtures may only include builtins ({inc})")
            inc = str(base_dir / inc)
        merged = deep_merge(merged, load_mapping(inc, seen))
    return deep_merge(merged, data)


def _build(cls, data, prefix, nested=None):
    nested = nested or {}
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError(f"{prefix}: must be a mapping")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for k, v in data.items():
        if k not in known:
            raise ConfigError(f"{prefix}.{k}: unknown field")
        if k in nested:
            kwargs[k] = _build(nested[k], v, f"{prefix}.{k}")
            continue
        default = getattr(cls(), k)
        try:
            if isinstance(default, bool):
                if not isinstance(v, bool):
                    raise TypeError
            elif isinstance(default, int):
                if isinstance(v, bool) or int(v) != v:
                    raise TypeError
                v = int(v)
            elif isinstance(default, float):
                if isinstance(v, bool):
                    raise TypeError
                v = float(v)
            elif isinstance(default, str):
                v = str(v)
        except (TypeError, ValueError):
            raise ConfigError(f"{prefix}.{k}: expected {type(default).__name__}, got {v!r}") from None
        kwargs[k] = v
    return cls(**kwargs)


def build_motor(data: Mapping | None, calibration: Mapping | None = None) -> MotorParams:
    motor = _build(MotorParams, data, "motor",
                   nested={"geometry": TurbineGeometry, "fluid": FluidTorqueParams})
    motor.validate()
    if calibration:
        motor = apply_calibration(motor, calibration)
    return motor


def _pairs(value, name):
    try:
        pairs = tuple((float(a), float(b)) for a, b in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a list of [x, y] pairs") from None
    return pairs


@functools.lru_cache(maxsize=32)
def _calibrated(motor: MotorParams, speed_obs, force_rows) -> MotorParams:
    if speed_obs:
        motor = replace(motor, fluid=calibrate_torque_map(speed_obs, motor).fluid)
    if force_rows:
        fc = calibrate_force_chain(force_rows, motor)
        motor = replace(motor, screw_efficiency=fc.screw_efficiency,
                        screw_friction_force=fc.screw_friction_force)
    return motor.validate()


def apply_calibration(motor: MotorParams, calibration: Mapping) -> MotorParams:
    """Fit the torque map, then the force chain, from a ``calibration`` section."""
    unknown = set(calibration) - {"speed_observations", "force_rows"}
    if unknown:
        raise ConfigError(f"calibration.{sorted(unknown)[0]}: unknown field")
    speed = _pairs(calibration.get("speed_observations", []), "calibration.speed_observations")
    force = _pairs(calibration.get("force_rows", []), "calibration.force_rows")
    return _calibrated(motor, speed, force)


_RUN_KEYS = {"dt", "duration", "seed", "supply_pressure", "pressure_noise", "velocity_window",
             "initial_position", "ramp"}


def scenario_from_mapping(data: Mapping) -> Scenario:
    top = {"motor", "calibration", "gains", "limits", "encoder", "load", "run", "targets", "label"}
    unknown = set(data) - top
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown section")
    run = dict(data.get("run") or {})
    bad = set(run) - _RUN_KEYS
    if bad:
        raise ConfigError(f"run.{sorted(bad)[0]}: unknown field")
    kwargs: dict[str, Any] = {
        "motor": build_motor(data.get("motor"), data.get("calibration")),
        "gains": _build(PidGains, data.get("gains"), "gains"),
        "limits": _build(ActuationLimits, data.get("limits"), "limits"),
        "encoder": _build(EncoderConfig, data.get("encoder"), "encoder"),
        "load": _build(LoadModel, data.get("load"), "load"),
    }
    defaults = Scenario()
    for k, v in run.items():
        default = getattr(defaults, k)
        try:
            if isinstance(default, bool):
                if not isinstance(v, bool):
                    raise TypeError
            elif isinstance(default, int):
                if int(v) != v:
                    raise TypeError
                v = int(v)
            else:
                v = float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"run.{k}: expected {type(default).__name__}, got {v!r}") from None
        kwargs[k] = v
    if "targets" in data:
        kwargs["targets"] = _pairs(data["targets"], "targets")
    if "label" in data:
        kwargs["label"] = str(data["label"])
    return Scenario(**kwargs).validate()


def load_scenario(source: str | Path, **overrides) -> Scenario:
    """Load, merge and validate a scenario file; keyword overrides replace fields."""
    scenario = scenario_from_mapping(load_mapping(source))
    if overrides:
        scenario = replace(scenario, **overrides).validate()
    return scenario


def load_motor(source: str | Path) -> MotorParams:
    """Motor parameters (calibrated if the file carries calibration data)."""
    data = load_mapping(source)
    return build_motor(data.get("motor"), data.get("calibration"))


def prototype_motor() -> MotorParams:
    """Motor fixture calibrated against the published anchors."""
    return load_motor(BUILTIN_PREFIX + "prototype")


def prototype_scenario(**overrides) -> Scenario:
    """The shared fixture as a scenario; keyword overrides replace fields."""
    return load_scenario(BUILTIN_PREFIX + "prototype", **overrides)
