"""Bohmian trajectories for Klein-Gordon wave functions."""

from ._kgbohm import (
    Error,
    WaveFunction,
    builtin_names,
    identity_suite,
    integrate,
    run_command,
    scenario_json,
    surface_density,
)

__all__ = [
    "Error",
    "WaveFunction",
    "builtin_names",
    "identity_suite",
    "integrate",
    "run_command",
    "scenario_json",
    "surface_density",
]
