"""Experiment harness: configs, scenario registry, reports, CLI, localization."""

from .config import CONFIG_SCHEMA_DOC, ExperimentConfig, noise_tag
from .reports import ReportRow, merge_reports, plot_report, read_report, write_report
from .scenarios import SCENARIOS, get_scenario, scenario_names

__all__ = [
    "CONFIG_SCHEMA_DOC",
    "ExperimentConfig",
    "ReportRow",
    "SCENARIOS",
    "get_scenario",
    "merge_reports",
    "noise_tag",
    "plot_report",
    "read_report",
    "scenario_names",
    "write_report",
]
