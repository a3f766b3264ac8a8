"""Simulation and experiment harness for a pneumatic Tesla-turbine servo actuator."""

from .control import ActuationLimits, PidGains, PidState, ValveCommand, pid_step, shape_command
from .drivetrain import (
    LoadModel, RotorState, axial_force, backdrive_filter, gearbox_out, screw_position,
    step_dynamics, tissue_load,
)
from .errors import (
    ActuatorError, ConfigError, EvaluationError, InsufficientDataError, NumericalError, RangeError,
    UndefinedValueError,
)
from .params import FluidTorqueParams, MotorParams, TurbineGeometry
from .sensing import EncoderConfig, EncoderState, estimate_velocity, sample_encoder
from .turbine_model import (
    VelocityProfile, calibrate_torque_map, flow_to_torque, shear_torque, steady_state_speed,
)

__version__ = "0.1.0"
