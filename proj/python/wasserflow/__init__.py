"""Suspension-semiflow path processes and empirical Wasserstein rates."""

from ._core import (
    NumericalError,
    SizeCapError,
    UsageError,
    decompose,
    doubling_step,
    fit_rate,
    holder_modulus_statistic,
    induced_step,
    lsv_step,
    omega,
    run_rate_experiment,
    sample_brownian,
    theoretical_rate,
    wasserstein_1d,
    wasserstein_assignment,
    wasserstein_entropic,
    wn_paths,
    __version__,
)

__all__ = [
    "NumericalError",
    "SizeCapError",
    "UsageError",
    "decompose",
    "doubling_step",
    "fit_rate",
    "holder_modulus_statistic",
    "induced_step",
    "lsv_step",
    "omega",
    "run_rate_experiment",
    "sample_brownian",
    "theoretical_rate",
    "wasserstein_1d",
    "wasserstein_assignment",
    "wasserstein_entropic",
    "wn_paths",
    "__version__",
]
