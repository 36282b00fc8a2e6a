"""Discrete-event simulator for HPC workload management."""

from ._core import (
    ConfigError,
    ParseError,
    WmsimError,
    dispatchers,
    experiment,
    generate,
    load_config,
    report,
    simulate,
    simulate_jobs,
    slowdown,
    update_vmax,
)

__all__ = [
    "ConfigError",
    "ParseError",
    "WmsimError",
    "dispatchers",
    "experiment",
    "generate",
    "load_config",
    "report",
    "simulate",
    "simulate_jobs",
    "slowdown",
    "update_vmax",
]
