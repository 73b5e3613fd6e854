"""Scenario loading, pipeline orchestration and report output."""

from .config import ScenarioConfig, load_config, validate_config
from .pipeline import EvaluationReport, emit_reports, run_pipeline

__all__ = ["EvaluationReport", "ScenarioConfig", "emit_reports", "load_config", "run_pipeline",
           "validate_config"]
