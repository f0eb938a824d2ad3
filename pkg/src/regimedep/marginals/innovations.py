"""Standardized (mean 0, variance 1) innovation distributions for GARCH models.

Skewed variants use the Fernandez-Steel two-piece construction with a single
skewness parameter ``lam > 0`` (``lam == 1`` is symmetric), re-centred and
re-scaled after skewing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ndtr, ndtri, stdtr, stdtrit

FAMILIES = ("gaussian", "student_t", "skew_gaussian", "skew_t")

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


class InnovationError(ValueError):
    pass


@dataclass(frozen=True)
class InnovationSpec:
    family: str = "gaussian"
    nu: float | None = None
    lam: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InnovationError(f"unknown innovation family {self.family!r}")
        if self.has_nu:
            if self.nu is None or not self.nu > 2:
                raise InnovationError("nu must be > 2")
        if self.has_lam:
            if self.lam is None or not self.lam > 0:
                raise InnovationError("lam must be > 0")

    @property
    def has_nu(self) -> bool:
        return self.family in ("student_t", "skew_t")

    @property
    def has_lam(self) -> bool:
        return self.family in ("skew_gaussian", "skew_t")

    @property
    def n_params(self) -> int:
        return int(self.has_nu) + int(self.has_lam)


class _UnitT:
    """Student t rescaled to unit variance."""

    def __init__(self, nu: float):
        self.nu = nu
        self.scale = np.sqrt((nu - 2.0) / nu)
        self._const = (gammaln(0.5 * (nu + 1)) - gammaln(0.5 * nu)
                       - 0.5 * np.log(nu * np.pi) - np.log(self.scale))

    def log_pdf(self, x):
        z = np.asarray(x) / self.scale
        return self._const - 0.5 * (self.nu + 1) * np.log1p(z * z / self.nu)

    def cdf(self, x):
        return stdtr(self.nu, np.asarray(x) / self.scale)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        # reflect the upper half so the median is exactly 0
        q = -stdtrit(self.nu, np.minimum(u, 1.0 - u))
        return np.where(u < 0.5, -q, np.where(u == 0.5, 0.0, q)) * self.scale

    def abs_mean(self) -> float:
        nu = self.nu
        return float(2.0 * np.sqrt(nu - 2.0) * np.exp(gammaln(0.5 * (nu + 1)) - gammaln(0.5 * nu))
                     / (np.sqrt(np.pi) * (nu - 1.0)))


class _UnitNormal:
    def log_pdf(self, x):
        x = np.asarray(x)
        return -LOG_SQRT_2PI - 0.5 * x * x

    def cdf(self, x):
        return ndtr(x)

    def quantile(self, u):
        return ndtri(u)

    def abs_mean(self) -> float:
        return float(np.sqrt(2.0 / np.pi))


class InnovationDistribution:
    """Distribution handle exposing ``log_pdf``, ``cdf``, ``quantile`` and ``sample``."""

    def __init__(self, spec: InnovationSpec):
        self.spec = spec
        self.base = _UnitT(spec.nu) if spec.has_nu else _UnitNormal()
        self.lam = float(spec.lam) if spec.has_lam else 1.0
        g = self.lam
        if g == 1.0:
            self.mu, self.sigma = 0.0, 1.0
        else:
            m1 = self.base.abs_mean()
            self.mu = m1 * (g - 1.0 / g)
            var = (1.0 - m1**2) * (g**2 + 1.0 / g**2) + 2.0 * m1**2 - 1.0
            self.sigma = float(np.sqrt(var))
        self._log_norm = np.log(2.0 / (g + 1.0 / g))

    def _raw_log_pdf(self, y):
        g = self.lam
        arg = np.where(y >= 0, y / g, y * g)
        return self._log_norm + self.base.log_pdf(arg)

    def _raw_cdf(self, y):
        g = self.lam
        g2 = g * g
        lower = 2.0 / (g2 + 1.0) * self.base.cdf(g * y)
        upper = 1.0 - 2.0 * g2 / (g2 + 1.0) * (1.0 - self.base.cdf(y / g))
        return np.where(y < 0, lower, upper)

    def log_pdf(self, x):
        y = self.mu + self.sigma * np.asarray(x, dtype=float)
        return np.log(self.sigma) + self._raw_log_pdf(y)

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def cdf(self, x):
        y = self.mu + self.sigma * np.asarray(x, dtype=float)
        return self._raw_cdf(y)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        g = self.lam
        g2 = g * g
        p0 = 1.0 / (g2 + 1.0)  # raw cdf at 0
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = self.base.quantile(u * (g2 + 1.0) / 2.0) / g
            hi = g * self.base.quantile(1.0 - (1.0 - u) * (g2 + 1.0) / (2.0 * g2))
        y = np.where(u < p0, lo, hi)
        return (y - self.mu) / self.sigma

    def sample(self, rng, size=None):
        rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
        return self.quantile(rng.uniform(size=size))


def innovation_distribution(spec: InnovationSpec) -> InnovationDistribution:
    return InnovationDistribution(spec)
