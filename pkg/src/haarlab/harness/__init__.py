"""Batch experiment orchestration: configs, runners, reports."""

from .config import ExperimentConfig, MeasureSpec, parse_config, parse_measure_spec
from .experiments import (
    ConvergenceReport,
    TrialRecord,
    classify_norm_oracle,
    run_experiment,
)
from .report import emit_report, load_manifest, verify_manifest

__all__ = [
    "ExperimentConfig",
    "MeasureSpec",
    "parse_config",
    "parse_measure_spec",
    "ConvergenceReport",
    "TrialRecord",
    "classify_norm_oracle",
    "run_experiment",
    "emit_report",
    "load_manifest",
    "verify_manifest",
]
