"""Gaussian and Student-t copulas."""

from __future__ import annotations

import numpy as np
from scipy import integrate
from scipy.special import gammaln, ndtr, ndtri, stdtr, stdtrit

from .._numerics import gl_panels
from .base import CopulaParams

LOG_2PI = np.log(2.0 * np.pi)


def latent_quantile(p: CopulaParams, u):
    if p.family == "gaussian":
        return ndtri(u)
    return stdtrit(p.nu, u)


def latent_cdf(p: CopulaParams, x):
    if p.family == "gaussian":
        return ndtr(x)
    return stdtr(p.nu, x)


def log_density(p: CopulaParams, u: np.ndarray) -> np.ndarray:
    """log c(u) for rows of ``u`` (shape n x d)."""
    R = p.corr
    L = np.linalg.cholesky(R)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    x = latent_quantile(p, u)
    w = np.linalg.solve(L, x.T).T  # L^-1 x
    quad = np.sum(w * w, axis=1)
    d = p.dim
    if p.family == "gaussian":
        return -0.5 * logdet - 0.5 * (quad - np.sum(x * x, axis=1))
    nu = p.nu
    const = gammaln(0.5 * (nu + d)) + (d - 1) * gammaln(0.5 * nu) - d * gammaln(0.5 * (nu + 1))
    return (const - 0.5 * logdet - 0.5 * (nu + d) * np.log1p(quad / nu)
            + 0.5 * (nu + 1) * np.sum(np.log1p(x * x / nu), axis=1))


def _latent_pdf(p: CopulaParams, w):
    if p.family == "gaussian":
        return np.exp(-0.5 * w * w - 0.5 * LOG_2PI)
    nu = p.nu
    return np.exp(gammaln(0.5 * (nu + 1)) - gammaln(0.5 * nu) - 0.5 * np.log(nu * np.pi)
                  - 0.5 * (nu + 1) * np.log1p(w * w / nu))


def _cond_cdf(p: CopulaParams, x2, w):
    """P(X2 <= x2 | X1 = w) for the bivariate latent distribution."""
    rho = p.rho
    if p.family == "gaussian":
        return ndtr((x2 - rho * w) / np.sqrt(1.0 - rho * rho))
    nu = p.nu
    scale = np.sqrt((nu + w * w) * (1.0 - rho * rho) / (nu + 1.0))
    return stdtr(nu + 1.0, (x2 - rho * w) / scale)


def h_function(p: CopulaParams, v, u):
    """Conditional cdf C(v | u) = dC(u, v)/du (bivariate)."""
    return _cond_cdf(p, latent_quantile(p, v), latent_quantile(p, u))


def cdf(p: CopulaParams, u: float, v: float) -> float:
    """Bivariate C(u, v) by one-dimensional adaptive quadrature of the conditional cdf."""
    if u <= 0 or v <= 0:
        return 0.0
    if u >= 1:
        return float(min(v, 1.0))
    if v >= 1:
        return float(u)
    x1 = float(latent_quantile(p, u))
    x2 = float(latent_quantile(p, v))
    val, _ = integrate.quad(lambda w: _latent_pdf(p, w) * _cond_cdf(p, x2, w), -np.inf, x1,
                            epsabs=1e-12, epsrel=1e-10, limit=200)
    return float(min(max(val, 0.0), min(u, v)))


def cdf_grid(p: CopulaParams, u_nodes: np.ndarray, v_nodes: np.ndarray, n_gl: int = 10) -> np.ndarray:
    """C(u_i, v_j) on a tensor grid, via cumulative panel quadrature along the first axis."""
    u_nodes = np.asarray(u_nodes, dtype=float)
    v_nodes = np.asarray(v_nodes, dtype=float)
    x1 = latent_quantile(p, u_nodes)
    x2 = latent_quantile(p, v_nodes)
    far = float(latent_quantile(p, 1e-15))
    order = np.argsort(x1)
    xs = x1[order]
    # refine so panels are short in asinh coordinates
    s_lo, s_hi = np.arcsinh(far), np.arcsinh(xs[-1])
    extra = np.sinh(np.linspace(s_lo, s_hi, 160))
    breaks = np.unique(np.concatenate([[far], extra, xs]))
    nodes, weights = gl_panels(breaks, n_gl)
    w = nodes.ravel()
    integrand = _latent_pdf(p, w)[:, None] * _cond_cdf(p, x2[None, :], w[:, None])
    panel = (weights.ravel()[:, None] * integrand).reshape(len(breaks) - 1, n_gl, -1).sum(axis=1)
    cum = np.vstack([np.zeros((1, x2.size)), np.cumsum(panel, axis=0)])
    pos = np.searchsorted(breaks, xs)
    out = np.empty((u_nodes.size, v_nodes.size))
    out[order] = cum[pos]
    return np.clip(out, 0.0, np.minimum(u_nodes[:, None], v_nodes[None, :]))


def sample(p: CopulaParams, n: int, rng: np.random.Generator) -> np.ndarray:
    L = np.linalg.cholesky(p.corr)
    z = rng.standard_normal((n, p.dim)) @ L.T
    if p.family == "gaussian":
        return ndtr(z)
    w = rng.chisquare(p.nu, size=(n, 1)) / p.nu
    return stdtr(p.nu, z / np.sqrt(w))
