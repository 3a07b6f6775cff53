"""Scenario configuration, experiment runners and the ``pebo-attitude`` command."""

from .config import ConfigError, ScenarioConfig, example1_config
from .example2 import run_example2
from .main import main
from .plots import emit_plots
from .runner import OUTPUT_DIR_ENV, RunResult, evaluate_conditions, run_scenario

__all__ = [
    "ConfigError",
    "OUTPUT_DIR_ENV",
    "RunResult",
    "ScenarioConfig",
    "emit_plots",
    "evaluate_conditions",
    "example1_config",
    "main",
    "run_example2",
    "run_scenario",
]
