"""Pseudo-observations: parametric PIT and rescaled empirical ranks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .garch import GarchFit

CLAMP = 1e-10


class PseudoObsError(ValueError):
    pass


@dataclass(frozen=True)
class PseudoSample:
    values: np.ndarray  # T x d, strictly inside (0, 1)
    source: str  # "parametric_pit" | "ecdf"
    asset_ids: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise PseudoObsError("pseudo-sample must be 2-d")
        if not np.all((v > 0) & (v < 1)):
            raise PseudoObsError("pseudo-observations must lie strictly inside (0, 1)")

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def pair(self, i: int, j: int) -> "PseudoSample":
        ids = (self.asset_ids[i], self.asset_ids[j]) if self.asset_ids else ()
        return PseudoSample(self.values[:, [i, j]], self.source, ids)

    def take(self, idx) -> "PseudoSample":
        return PseudoSample(self.values[idx], self.source, self.asset_ids)


def pit_pseudo_obs(panel, fits: list[GarchFit]) -> PseudoSample:
    """u[t, j] = F_eps_j(y[t, j] / sigma_hat[t, j]), clamped to [1e-10, 1 - 1e-10]."""
    returns = np.asarray(panel.returns, dtype=float)
    if len(fits) != returns.shape[1]:
        raise PseudoObsError(f"{len(fits)} fits for {returns.shape[1]} columns")
    cols = []
    for j, fit in enumerate(fits):
        if fit.sigma.size != returns.shape[0]:
            raise PseudoObsError(f"fit {j} has {fit.sigma.size} volatilities for {returns.shape[0]} rows")
        cols.append(fit.innovation.cdf(returns[:, j] / fit.sigma))
    u = np.clip(np.column_stack(cols), CLAMP, 1.0 - CLAMP)
    return PseudoSample(u, "parametric_pit", tuple(panel.asset_ids))


def ecdf_values(x: np.ndarray) -> np.ndarray:
    """Average ranks over (n + 1), column-wise."""
    x = np.asarray(x, dtype=float)
    return rankdata(x, axis=0) / (x.shape[0] + 1.0)


def ecdf_pseudo_obs(panel) -> PseudoSample:
    returns = np.asarray(panel.returns, dtype=float)
    if returns.shape[0] < 2:
        raise PseudoObsError("need T >= 2")
    return PseudoSample(ecdf_values(returns), "ecdf", tuple(panel.asset_ids))
