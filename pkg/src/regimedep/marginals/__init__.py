from .garch import (
    GarchError,
    GarchFit,
    GarchParams,
    GarchSelection,
    GarchSpec,
    fit_garch,
    garch_filter,
    garch_loglik,
    garch_variance,
    select_garch,
    simulate_garch,
)
from .innovations import InnovationDistribution, InnovationError, InnovationSpec, innovation_distribution
from .pseudo import PseudoObsError, PseudoSample, ecdf_pseudo_obs, pit_pseudo_obs

__all__ = [
    "GarchError",
    "GarchFit",
    "GarchParams",
    "GarchSelection",
    "GarchSpec",
    "InnovationDistribution",
    "InnovationError",
    "InnovationSpec",
    "PseudoObsError",
    "PseudoSample",
    "ecdf_pseudo_obs",
    "fit_garch",
    "garch_filter",
    "garch_loglik",
    "garch_variance",
    "innovation_distribution",
    "pit_pseudo_obs",
    "select_garch",
    "simulate_garch",
]
