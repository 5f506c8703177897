"""Weighted composite-likelihood variogram fitting and kriging under preferential sampling."""

from ._krigeweight import (
    EmptySampleError,
    FitResult,
    IllConditionedError,
    InputError,
    VariogramModel,
    draw_pseudo_locations,
    draw_sample,
    fit_variogram,
    g_function,
    kde_intensity,
    neg_log_wcl,
    ordinary_kriging,
    population_variance,
    run_study,
    scaled_kriging_variance,
    simulate_gp,
    simulate_lgcp,
    simulated_kriging_variance,
    smooth_inclusion_rate,
)

__all__ = [
    "EmptySampleError",
    "FitResult",
    "IllConditionedError",
    "InputError",
    "VariogramModel",
    "draw_pseudo_locations",
    "draw_sample",
    "fit_variogram",
    "g_function",
    "kde_intensity",
    "neg_log_wcl",
    "ordinary_kriging",
    "population_variance",
    "run_study",
    "scaled_kriging_variance",
    "simulate_gp",
    "simulate_lgcp",
    "simulated_kriging_variance",
    "smooth_inclusion_rate",
]
