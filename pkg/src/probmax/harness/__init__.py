"""Experiment harness: configs, reference solutions, replicated runs and reports."""

from .config import PRESETS, ConfigError, ExperimentConfig, ReferenceConfig, load_config, parse_config
from .examples import EXAMPLE1_A, EXAMPLE1_B, EXAMPLE2_DIMS, builtin_examples, example1, example2
from .experiment import MetricOracle, ReformulationError, RunReport, cross_oracle_gate, run_experiment
from .reference import Reference, ReferenceWarning, cached_reference, compute_reference
from .report import emit_report

__all__ = [
    "PRESETS", "ConfigError", "ExperimentConfig", "ReferenceConfig", "load_config",
    "parse_config", "EXAMPLE1_A", "EXAMPLE1_B", "EXAMPLE2_DIMS", "builtin_examples",
    "example1", "example2", "MetricOracle", "ReformulationError", "RunReport",
    "cross_oracle_gate", "run_experiment", "Reference", "ReferenceWarning",
    "cached_reference", "compute_reference", "emit_report",
]
