"""Command-line experiment harness: JSON configs in, CSV/JSON/SVG artifacts out."""

from .config import ConfigError, ExperimentConfig, load_config
from .cli import main

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "main"]
