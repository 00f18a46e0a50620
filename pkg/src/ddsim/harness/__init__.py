"""Experiment harness: config parsing, presets, seeded parallel execution,
CSV emission."""

from .config import ExperimentConfig, load_config, parse_config_text
from .presets import PRESETS, PRESET_NOTES, build_config
from .runner import (
    build_points,
    build_sequence,
    compare_protocols,
    magic_omega,
    run_experiment,
    run_point,
)

__all__ = [
    "ExperimentConfig", "load_config", "parse_config_text",
    "PRESETS", "PRESET_NOTES", "build_config",
    "build_points", "build_sequence", "compare_protocols",
    "magic_omega", "run_experiment", "run_point",
]
