"""Deterministic experiment harness: scenario files, runs, reports."""

from .scenario import Scenario, load_scenario, parse_scenario
from .experiment import ExperimentResult, MethodResult, run_experiment, run_sweep
from .report import emit_csv, emit_svg, summary_table, sweep_csv_text, sweep_table, trajectory_csv_text

__all__ = [
    "Scenario",
    "load_scenario",
    "parse_scenario",
    "ExperimentResult",
    "MethodResult",
    "run_experiment",
    "run_sweep",
    "emit_csv",
    "emit_svg",
    "summary_table",
    "sweep_csv_text",
    "sweep_table",
    "trajectory_csv_text",
]
