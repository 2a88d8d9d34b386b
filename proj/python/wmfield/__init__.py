"""Whittle-Matern random fields on the sphere and interval.

Sampling through truncated spectral expansions, smoothness estimation by
profiled Gaussian likelihood, and Kakutani classification of the induced
product measures.
"""

from ._core import (
    ConfigError,
    EstimationError,
    design,
    design_diagnostics,
    estimate,
    gram,
    kakutani,
    run_scenario,
    simulate,
    violin_svg,
)

__all__ = [
    "ConfigError",
    "EstimationError",
    "design",
    "design_diagnostics",
    "estimate",
    "gram",
    "kakutani",
    "run_scenario",
    "simulate",
    "violin_svg",
]
