"""Bundled synthetic two-regime dataset.

Four assets with GARCH(1,1) Student-t marginals.  Innovations are coupled by a
strongly dependent t copula (nu = 4) before the change date and by a weaker
Gaussian copula after it.  Announcements arrive at about five per quarter
before the change and one per quarter after.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .copulas import CopulaParams, sample_copula
from .marginals import GarchParams, GarchSpec, innovation_distribution, simulate_garch
from .marginals.innovations import InnovationSpec

ASSETS = ("BZ", "CL", "NG", "RB")

# period-1 and period-2 correlation matrices (order BZ, CL, NG, RB)
R1 = np.array([[1.00, 0.95, 0.50, 0.80],
               [0.95, 1.00, 0.50, 0.80],
               [0.50, 0.50, 1.00, 0.45],
               [0.80, 0.80, 0.45, 1.00]])
R2 = np.array([[1.00, 0.85, 0.30, 0.70],
               [0.85, 1.00, 0.30, 0.70],
               [0.30, 0.30, 1.00, 0.25],
               [0.70, 0.70, 0.25, 1.00]])


@dataclass(frozen=True)
class SyntheticConfig:
    start: str = "2001-01-01"
    end: str = "2010-12-31"
    change_date: str = "2006-01-01"
    nu1: float = 4.0
    corr1: np.ndarray = field(default_factory=lambda: R1.copy())
    corr2: np.ndarray = field(default_factory=lambda: R2.copy())
    garch: tuple[tuple[float, float, float, float], ...] = (
        # alpha0, alpha1, beta1, nu (returns in log units)
        (4e-6, 0.06, 0.92, 6.0),
        (4e-6, 0.06, 0.92, 6.0),
        (1.5e-5, 0.08, 0.89, 5.0),
        (6e-6, 0.07, 0.90, 6.0),
    )
    start_prices: tuple[float, ...] = (25.0, 27.0, 4.5, 0.8)
    rate1: float = 5.0
    rate2: float = 1.0
    burn: int = 500


@dataclass
class SyntheticData:
    prices: pd.DataFrame  # wide: date + one column per asset
    announcements: pd.DataFrame  # date, indicator
    change_date: np.datetime64
    config: SyntheticConfig

    def write(self, directory) -> tuple[Path, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        p = d / "prices.csv"
        a = d / "announcements.csv"
        self.prices.to_csv(p, index=False, float_format="%.10g")
        self.announcements.to_csv(a, index=False)
        return p, a


def generate(seed: int = 2028, config: SyntheticConfig | None = None) -> SyntheticData:
    """Deterministic synthetic prices and announcement indicator."""
    cfg = config or SyntheticConfig()
    data_seq, ann_seq = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(data_seq)
    days = pd.bdate_range(cfg.start, cfg.end)
    change = pd.Timestamp(cfg.change_date)
    # returns are dated by the later price, so T = len(days) - 1
    ret_days = days[1:]
    n1 = int(np.sum(ret_days < change))
    n2 = len(ret_days) - n1

    cop1 = CopulaParams.student_t(cfg.corr1, cfg.nu1)
    cop2 = CopulaParams.gaussian(cfg.corr2)
    u = np.vstack([sample_copula(cop1, cfg.burn + n1, rng), sample_copula(cop2, n2, rng)])

    rets = np.empty((n1 + n2, len(ASSETS)))
    spec = GarchSpec(1, 1, "student_t")
    for j, (a0, a1, b1, nu) in enumerate(cfg.garch):
        params = GarchParams(a0, (a1,), (b1,), nu, None)
        eps = innovation_distribution(InnovationSpec("student_t", nu=nu)).quantile(u[:, j])
        path = simulate_garch(spec, params, eps.size, innovations=eps)
        rets[:, j] = path[cfg.burn:]

    logp = np.vstack([np.log(cfg.start_prices), np.log(cfg.start_prices) + np.cumsum(rets, axis=0)])
    prices = pd.DataFrame(np.exp(logp), columns=list(ASSETS))
    prices.insert(0, "date", days.strftime("%Y-%m-%d"))

    rng = np.random.default_rng(ann_seq)
    ind = np.zeros(len(days), dtype=int)
    quarters = days.to_period("Q")
    for q in quarters.unique():
        pos = np.flatnonzero(quarters == q)
        rate = cfg.rate1 if q.start_time < change else cfg.rate2
        k = min(int(rng.poisson(rate)), pos.size)
        ind[rng.choice(pos, size=k, replace=False)] = 1
    ann = pd.DataFrame({"date": days.strftime("%Y-%m-%d"), "indicator": ind})
    return SyntheticData(prices, ann, np.datetime64(change.date(), "D"), cfg)
