"""Greedy descent over finite action sets with approximate multipliers.

Thin Python layer over the compiled core: geometry helpers, step-size
admissibility limits, theoretical brackets, and full experiment runs driven
by the same config files the CLI consumes.
"""

from ._core import (
    OracleFailure,
    ValidationError,
    alpha_bound,
    beta_bound,
    bound_lagrangian_average,
    bound_main,
    bound_slackness,
    brute_argmin,
    clipped_accumulator_closed_form,
    diameter,
    experiment_bounds,
    experiment_oracle,
    feasibility_cap,
    max_point_norm,
    run_experiment,
    tracking_gap_bound,
)

__all__ = [
    "OracleFailure",
    "ValidationError",
    "alpha_bound",
    "beta_bound",
    "bound_lagrangian_average",
    "bound_main",
    "bound_slackness",
    "brute_argmin",
    "clipped_accumulator_closed_form",
    "diameter",
    "experiment_bounds",
    "experiment_oracle",
    "feasibility_cap",
    "max_point_norm",
    "run_experiment",
    "tracking_gap_bound",
]

__version__ = "1.0.0"
