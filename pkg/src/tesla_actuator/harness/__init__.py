"""Scenario runner, bench experiments and the command-line interface."""

from .experiments import (
    PositioningSpec, force_table, positioning_experiment, speed_pressure_sweep, summarize,
)
from .runner import run_scenario
from .scenario import Scenario, load_motor, load_scenario, prototype_motor, prototype_scenario
from .trace import TraceSample, trace_from_csv, trace_to_csv
