"""Simulation and analysis of a two-beam wire-scan interference experiment."""

from .config import ExperimentConfig, load_config, reference_config, parse_config

__version__ = "0.1.0"

__all__ = ["ExperimentConfig", "load_config", "reference_config", "parse_config"]
