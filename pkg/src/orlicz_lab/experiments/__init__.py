"""Scenario configuration, runners and the command line entry point."""

from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .scenarios import (SCENARIOS, PreconditionError, ScenarioResult, run_counterexample,
                        run_degiorgi_sweep, run_expint, run_main0, run_main1)

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "parse_config",
           "SCENARIOS", "PreconditionError", "ScenarioResult", "run_main0", "run_main1",
           "run_counterexample", "run_expint", "run_degiorgi_sweep"]
