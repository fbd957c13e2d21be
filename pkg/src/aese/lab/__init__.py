"""Configuration files, presets, sweeps, budgets and the CLI."""
from .budget import budget_csv, budget_report, render_table
from .config import ConfigError, LoadedConfig, SweepSpec, apply_override, dumps, load_config, parse_config, resolve
from .presets import PRESETS, load_preset, preset_names, preset_raw, preset_toml
from .sweep import CSV_COLUMNS, PointResult, RunRecord, SweepError, csv_text, run_sweep, write_outputs

__all__ = [
    "CSV_COLUMNS",
    "ConfigError",
    "LoadedConfig",
    "PRESETS",
    "PointResult",
    "RunRecord",
    "SweepError",
    "SweepSpec",
    "apply_override",
    "budget_csv",
    "budget_report",
    "csv_text",
    "dumps",
    "load_config",
    "load_preset",
    "parse_config",
    "preset_names",
    "preset_raw",
    "preset_toml",
    "render_table",
    "resolve",
    "run_sweep",
    "write_outputs",
]
