"""Skew-t copula built on the Azzalini-Capitanio multivariate skew-t.

The univariate marginals are skew-t with shape ``alpha_j* = delta_j / sqrt(1 - delta_j^2)``.
Their cdf has no closed form; it is integrated numerically on a grid in asinh
coordinates and inverted by Newton steps on a cubic Hermite interpolant of the
tabulated cdf.  Tables are cached per ``(alpha, nu)``.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np
from scipy.special import gammaln, stdtr

from .._numerics import gl_panels
from .base import CopulaParams

X_MAX = 1e7
N_PANELS = 1200
N_GL = 4
_CACHE_SIZE = 256

LOG2 = np.log(2.0)


def _t_logpdf(x, nu):
    return (gammaln(0.5 * (nu + 1)) - gammaln(0.5 * nu) - 0.5 * np.log(nu * np.pi)
            - 0.5 * (nu + 1) * np.log1p(x * x / nu))


def _log_tcdf(x, nu):
    return np.log(np.maximum(stdtr(nu, x), 1e-300))


def skewt1_logpdf(x, alpha: float, nu: float):
    """Univariate standard skew-t log density (location 0, scale 1)."""
    x = np.asarray(x, dtype=float)
    arg = alpha * x * np.sqrt((nu + 1.0) / (x * x + nu))
    return LOG2 + _t_logpdf(x, nu) + _log_tcdf(arg, nu + 1.0)


class SkewTMarginal:
    """Tabulated cdf / quantile of the univariate skew-t(alpha, nu)."""

    def __init__(self, alpha: float, nu: float):
        self.alpha = float(alpha)
        self.nu = float(nu)
        s = np.linspace(-np.arcsinh(X_MAX), np.arcsinh(X_MAX), N_PANELS + 1)
        b = np.sinh(s)
        nodes, weights = gl_panels(b, N_GL)
        dens = np.exp(skewt1_logpdf(nodes.ravel(), self.alpha, self.nu)).reshape(nodes.shape)
        mass = np.sum(dens * weights, axis=1)
        # asymptotic tail masses beyond +-X_MAX
        lim = self.alpha * np.sqrt(self.nu + 1.0)
        tail = 2.0 * stdtr(self.nu, -X_MAX)
        left = tail * stdtr(self.nu + 1.0, -lim)
        right = tail * stdtr(self.nu + 1.0, lim)
        self.breaks = b
        self.s = s
        self.F = np.concatenate([[left], left + np.cumsum(mass)])
        Fc = np.concatenate([[right], right + np.cumsum(mass[::-1])])[::-1]
        # dF/ds at the breakpoints
        g = np.exp(skewt1_logpdf(b, self.alpha, self.nu)) * np.cosh(s)
        # tails are near-linear in log F (left) and log(1 - F) (right)
        self.side = np.where(self.F[1:] <= 0.5, -1, np.where(self.F[:-1] >= 0.5, 1, 0))
        self.logF = np.log(self.F)
        self.logFc = np.log(Fc)
        self.dlogF = g / self.F
        self.dlogFc = -g / Fc
        self.g = g

    def _coeffs(self, k):
        """Per-panel Hermite data: side, s0, h, end values and end slopes."""
        side = self.side[k]
        left, right = side < 0, side > 0
        y0 = np.where(left, self.logF[k], np.where(right, self.logFc[k], self.F[k]))
        y1 = np.where(left, self.logF[k + 1], np.where(right, self.logFc[k + 1], self.F[k + 1]))
        m0 = np.where(left, self.dlogF[k], np.where(right, self.dlogFc[k], self.g[k]))
        m1 = np.where(left, self.dlogF[k + 1], np.where(right, self.dlogFc[k + 1], self.g[k + 1]))
        s0 = self.s[k]
        return side, s0, self.s[k + 1] - s0, y0, y1, m0, m1

    @staticmethod
    def _hermite(x, c):
        """Cubic Hermite interpolant of the cdf in the asinh coordinate, and its x-derivative.

        Left-tail panels interpolate log F, right-tail panels log(1 - F).
        """
        side, s0, h, y0, y1, m0, m1 = c
        t = (np.arcsinh(x) - s0) / h
        t2 = t * t
        t3 = t2 * t
        dy0 = y1 - y0
        y = y0 + (3 * t2 - 2 * t3) * dy0 + (t3 - 2 * t2 + t) * h * m0 + (t3 - t2) * h * m1
        dy = (6 * t - 6 * t2) * dy0 / h + (3 * t2 - 4 * t + 1) * m0 + (3 * t2 - 2 * t) * m1
        ey = np.exp(np.where(side != 0, y, 0.0))
        F = np.where(side < 0, ey, np.where(side > 0, 1.0 - ey, y))
        dFds = np.where(side < 0, ey * dy, np.where(side > 0, -ey * dy, dy))
        return F, dFds / np.sqrt(1.0 + x * x)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.breaks[0], self.breaks[-1])
        k = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, N_PANELS - 1)
        F, _ = self._hermite(x, self._coeffs(k))
        return np.clip(F, 0.0, 1.0)

    def logpdf(self, x):
        return skewt1_logpdf(x, self.alpha, self.nu)

    def quantile(self, u):
        """Monotone bracketing (table lookup) followed by safeguarded Newton steps."""
        u = np.asarray(u, dtype=float)
        k = np.clip(np.searchsorted(self.F, u, side="right") - 1, 0, N_PANELS - 1)
        lo, hi = self.breaks[k], self.breaks[k + 1]
        Flo, Fhi = self.F[k], self.F[k + 1]
        span = np.where(Fhi > Flo, Fhi - Flo, 1.0)
        frac = np.clip((u - Flo) / span, 0.0, 1.0)
        x = np.sinh(self.s[k] + (self.s[k + 1] - self.s[k]) * frac)
        c = self._coeffs(k)
        for _ in range(4):
            F, dF = self._hermite(x, c)
            step = np.where(dF > 0, (F - u) / np.where(dF > 0, dF, 1.0), 0.0)
            x = np.clip(x - step, lo, hi)
        return x


_tables: "OrderedDict[tuple[float, float], SkewTMarginal]" = OrderedDict()


def marginal(alpha: float, nu: float) -> SkewTMarginal:
    key = (float(alpha), float(nu))
    tab = _tables.get(key)
    if tab is None:
        tab = SkewTMarginal(*key)
        _tables[key] = tab
        if len(_tables) > _CACHE_SIZE:
            _tables.popitem(last=False)
    else:
        _tables.move_to_end(key)
    return tab


def marginal_alphas(p: CopulaParams) -> np.ndarray:
    d = np.asarray(p.delta, dtype=float)
    return d / np.sqrt(1.0 - d * d)


def joint_logpdf(p: CopulaParams, x: np.ndarray) -> np.ndarray:
    """Log density of the d-variate skew-t ST_d(0, R, alpha, nu) at rows of ``x``."""
    d, nu = p.dim, p.nu
    L = np.linalg.cholesky(p.corr)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    w = np.linalg.solve(L, x.T).T
    quad = np.sum(w * w, axis=1)
    log_td = (gammaln(0.5 * (nu + d)) - gammaln(0.5 * nu) - 0.5 * d * np.log(nu * np.pi)
              - 0.5 * logdet - 0.5 * (nu + d) * np.log1p(quad / nu))
    arg = (x @ p.alpha) * np.sqrt((nu + d) / (quad + nu))
    return LOG2 + log_td + _log_tcdf(arg, nu + d)


def latent_quantile(p: CopulaParams, u: np.ndarray) -> np.ndarray:
    u = np.atleast_2d(u)
    alphas = marginal_alphas(p)
    return np.column_stack([marginal(a, p.nu).quantile(u[:, j]) for j, a in enumerate(alphas)])


def log_density(p: CopulaParams, u: np.ndarray) -> np.ndarray:
    alphas = marginal_alphas(p)
    x = latent_quantile(p, u)
    margins = sum(skewt1_logpdf(x[:, j], a, p.nu) for j, a in enumerate(alphas))
    return joint_logpdf(p, x) - margins


def sample(p: CopulaParams, n: int, rng: np.random.Generator) -> np.ndarray:
    d = p.dim
    delta = np.asarray(p.delta, dtype=float)
    cov = np.empty((d + 1, d + 1))
    cov[0, 0] = 1.0
    cov[0, 1:] = cov[1:, 0] = delta
    cov[1:, 1:] = p.corr
    L = np.linalg.cholesky(cov)
    z = rng.standard_normal((n, d + 1)) @ L.T
    sn = np.where(z[:, :1] > 0, z[:, 1:], -z[:, 1:])
    w = rng.chisquare(p.nu, size=(n, 1)) / p.nu
    x = sn / np.sqrt(w)
    alphas = marginal_alphas(p)
    return np.column_stack([marginal(a, p.nu).cdf(x[:, j]) for j, a in enumerate(alphas)])


def _axis_breaks(lo: float, hi: float, pts=(), n: int = 120) -> np.ndarray:
    s = np.linspace(np.arcsinh(lo), np.arcsinh(hi), n)
    b = np.concatenate([np.sinh(s), np.asarray(pts, dtype=float)])
    return np.unique(b[(b >= lo) & (b <= hi)])


def box_cumulative(p: CopulaParams, b1: np.ndarray, b2: np.ndarray, n_gl: int = 6) -> np.ndarray:
    """Integral of the bivariate latent density over [b1[0], b1[i]] x [b2[0], b2[j]]."""
    n1, w1 = gl_panels(b1, n_gl)
    n2, w2 = gl_panels(b2, n_gl)
    xx, yy = np.meshgrid(n1.ravel(), n2.ravel(), indexing="ij")
    dens = np.exp(joint_logpdf(p, np.column_stack([xx.ravel(), yy.ravel()]))).reshape(xx.shape)
    dens *= w1.ravel()[:, None] * w2.ravel()[None, :]
    panel = dens.reshape(len(b1) - 1, n_gl, len(b2) - 1, n_gl).sum(axis=(1, 3))
    cum = np.zeros((len(b1), len(b2)))
    cum[1:, 1:] = np.cumsum(np.cumsum(panel, axis=0), axis=1)
    return cum


def _far(p: CopulaParams, j: int, tail: float) -> float:
    a = marginal_alphas(p)[j]
    return float(marginal(a, p.nu).quantile(np.array([tail]))[0])


def cdf_grid(p: CopulaParams, u_nodes: np.ndarray, v_nodes: np.ndarray) -> np.ndarray:
    u_nodes = np.asarray(u_nodes, dtype=float)
    v_nodes = np.asarray(v_nodes, dtype=float)
    x1 = latent_quantile(p, np.column_stack([u_nodes, np.full_like(u_nodes, 0.5)]))[:, 0]
    x2 = latent_quantile(p, np.column_stack([np.full_like(v_nodes, 0.5), v_nodes]))[:, 1]
    lo1, lo2 = _far(p, 0, 1e-12), _far(p, 1, 1e-12)
    b1 = _axis_breaks(lo1, max(x1.max(), lo1 + 1e-9), x1)
    b2 = _axis_breaks(lo2, max(x2.max(), lo2 + 1e-9), x2)
    cum = box_cumulative(p, b1, b2)
    i = np.searchsorted(b1, x1)
    j = np.searchsorted(b2, x2)
    out = cum[np.ix_(i, j)]
    return np.clip(out, 0.0, np.minimum(u_nodes[:, None], v_nodes[None, :]))


def cdf(p: CopulaParams, u: float, v: float) -> float:
    if u <= 0 or v <= 0:
        return 0.0
    if u >= 1:
        return float(min(v, 1.0))
    if v >= 1:
        return float(u)
    return float(cdf_grid(p, np.array([u]), np.array([v]))[0, 0])


def joint_upper(p: CopulaParams, u: float, v: float) -> float:
    """P(U > u, V > v) by direct integration over the upper box."""
    x1 = latent_quantile(p, np.array([[u, 0.5]]))[0, 0]
    x2 = latent_quantile(p, np.array([[0.5, v]]))[0, 1]
    hi1, hi2 = _far(p, 0, 1 - 1e-13), _far(p, 1, 1 - 1e-13)
    b1 = _axis_breaks(x1, max(hi1, x1 + 1e-9), (x1,))
    b2 = _axis_breaks(x2, max(hi2, x2 + 1e-9), (x2,))
    return float(box_cumulative(p, b1, b2)[-1, -1])
