"""Experiment harness: configs, seeded sweeps, output and golden replay."""

from .config import ALGORITHMS, ConfigError, ExperimentConfig, parse_db_range
from .emit import CSV_COLUMNS, emit, to_csv, to_json
from .replay import ReplayReport, replay_table1, table1_path
from .sweep import PointStats, SweepResult, run_sweep

__all__ = [
    "ALGORITHMS", "CSV_COLUMNS", "ConfigError", "ExperimentConfig", "PointStats",
    "ReplayReport", "SweepResult", "emit", "parse_db_range", "replay_table1",
    "run_sweep", "table1_path", "to_csv", "to_json",
]
