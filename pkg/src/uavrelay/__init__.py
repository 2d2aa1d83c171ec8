"""Relay-assisted cellular downlink: closed-form SIR analysis, Monte Carlo checks and a multi-cell simulator."""
from .scenario import Scenario, ScenarioError, Variant, derive_seed, load_scenario

__all__ = ["Scenario", "ScenarioError", "Variant", "derive_seed", "load_scenario"]
