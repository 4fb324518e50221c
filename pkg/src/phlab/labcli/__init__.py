"""Configuration-driven experiment runner with CSV/JSON/SVG outputs."""

from .config import ExperimentConfig, MapConfig, Params, load_config, serialize_config
from .runner import ExperimentReport, emit_csv, run_experiment
from .svg import emit_svg

__all__ = [
    "ExperimentConfig",
    "MapConfig",
    "Params",
    "load_config",
    "serialize_config",
    "ExperimentReport",
    "emit_csv",
    "run_experiment",
    "emit_svg",
]
