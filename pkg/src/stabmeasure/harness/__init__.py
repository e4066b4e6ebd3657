"""Configuration, replication runner, reports and CLI."""
from .config import ConfigError, ExperimentConfig, build_config, load_config
from .report import ConvergenceReport, ReportRow, emit, parse_csv, parse_json
from .runner import replicate, run
