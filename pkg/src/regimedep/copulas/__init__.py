"""Copula families, pseudo-likelihood fitting and BIC selection."""

from .base import (ARCHIMEDEAN, CLAMP, ELLIPTICAL, FAMILIES, NU_MAX, CopulaError, CopulaParams,
                   corr_to_partial, nearest_corr, partial_to_corr)
from .families import (copula_cdf, copula_cdf_grid, copula_density, copula_log_density,
                       copula_log_density_grid,
                       sample_copula)
from .fitting import (CopulaFit, CopulaSelection, TwoStepResult, attach_std_errors, fit_copula, select_copula,
                      two_step_fit)

__all__ = [
    "ARCHIMEDEAN", "CLAMP", "ELLIPTICAL", "FAMILIES", "NU_MAX", "CopulaError", "CopulaParams",
    "corr_to_partial", "nearest_corr", "partial_to_corr", "copula_cdf", "copula_cdf_grid",
    "copula_density", "copula_log_density", "copula_log_density_grid", "sample_copula", "CopulaFit", "CopulaSelection",
    "TwoStepResult", "attach_std_errors", "fit_copula", "select_copula", "two_step_fit",
]
