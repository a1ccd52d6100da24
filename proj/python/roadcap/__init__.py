"""Highway traffic capacity: emission inventory, RANS dispersion and capacity inversion."""

from ._core import (
    ConfigError,
    ConvergenceError,
    IoError,
    ValidationError,
    bisection_invert,
    calibrate_files,
    capacity_from_totals,
    effective_config,
    from_internal,
    inventory,
    mesh_cell_count,
    pollutants,
    run_pipeline,
    seconds_per_year,
    settling_velocity,
    to_internal,
)

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "IoError",
    "ValidationError",
    "bisection_invert",
    "calibrate_files",
    "capacity_from_totals",
    "effective_config",
    "from_internal",
    "inventory",
    "mesh_cell_count",
    "pollutants",
    "run_pipeline",
    "seconds_per_year",
    "settling_velocity",
    "to_internal",
]
