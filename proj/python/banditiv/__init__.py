"""Instrumented linear bandits."""

from ._core import (
    ConfigError,
    DataError,
    InferenceError,
    SuffStats,
    asymptotic_ci,
    batch_tsls,
    coverage,
    normal_quantile,
    optimistic_scores,
    run_synth,
    widths,
)

__all__ = [
    "ConfigError",
    "DataError",
    "InferenceError",
    "SuffStats",
    "asymptotic_ci",
    "batch_tsls",
    "coverage",
    "normal_quantile",
    "optimistic_scores",
    "run_synth",
    "widths",
]
