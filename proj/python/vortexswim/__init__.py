"""Fish-in-a-wake simulator: Python access to the C++ core plus readers for
the files the command line tool writes."""

from ._core import (
    ConfigError,
    DivergedError,
    DomainError,
    FishEnv,
    IoError,
    Network,
    RunConfig,
    Solver,
    config_keys,
    constraint_residuals,
    epsilon_at,
    half_width,
    interpolate,
    kernel,
    read_snapshot,
    reward,
    run,
    solve_wave_coeffs,
    spread_force,
    validate,
    waveform,
    write_snapshot,
)
from .files import load_snapshot, read_rewards, read_summary, read_trajectory, rolling_mean

__all__ = [
    "ConfigError", "DivergedError", "DomainError", "FishEnv", "IoError", "Network", "RunConfig",
    "Solver", "config_keys", "constraint_residuals", "epsilon_at", "half_width", "interpolate",
    "kernel", "read_snapshot", "reward", "run", "solve_wave_coeffs", "spread_force", "validate",
    "waveform", "write_snapshot", "load_snapshot", "read_rewards", "read_summary",
    "read_trajectory", "rolling_mean",
]
