"""Closed-loop scenarios, metrics, CSV export, comparison tables and self-checks."""

from .config import (
    EXAMPLE_GAINS,
    ConfigError,
    GridSpec,
    OutputSpec,
    ReferenceSpec,
    ScenarioConfig,
    config_from_dict,
    example_case,
    load_config,
    with_horizon,
)
from .metrics import MetricsReport, compute_metrics, csv_columns, export_csv, load_csv, read_truth, write_metrics
from .simulation import ScenarioDivergence, SimulationRecord, Truth, build_scenario, run_scenario, simulate
from .table import ABSENT, ComparisonTable, run_table
from .verify import VerifyReport, verify

__all__ = [
    "EXAMPLE_GAINS", "ConfigError", "GridSpec", "OutputSpec", "ReferenceSpec", "ScenarioConfig",
    "config_from_dict", "example_case", "load_config", "with_horizon",
    "MetricsReport", "compute_metrics", "csv_columns", "export_csv", "load_csv", "read_truth", "write_metrics",
    "ScenarioDivergence", "SimulationRecord", "Truth", "build_scenario", "run_scenario", "simulate",
    "ABSENT", "ComparisonTable", "run_table", "VerifyReport", "verify",
]
