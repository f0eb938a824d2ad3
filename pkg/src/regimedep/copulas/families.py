"""Family-independent entry points: density, cdf, sampling."""

from __future__ import annotations

import numpy as np

from .._numerics import as_rng
from . import archimedean, elliptical, skewt
from .base import ARCHIMEDEAN, CLAMP, CopulaError, CopulaParams, check_interior


def _module(family: str):
    if family in ARCHIMEDEAN:
        return archimedean
    if family == "skew_t":
        return skewt
    return elliptical


def copula_log_density(params: CopulaParams, u, *, clamp: bool = False) -> np.ndarray:
    """log c(u) at each row of ``u`` (n x d, or a single point of length d).

    With ``clamp=True`` arguments are first clipped to [1e-10, 1 - 1e-10];
    otherwise boundary values raise :class:`CopulaError`.
    """
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    if u.shape[1] != params.dim:
        raise CopulaError(f"expected points of dimension {params.dim}")
    u = np.clip(u, CLAMP, 1.0 - CLAMP) if clamp else check_interior(u)
    out = _module(params.family).log_density(params, u)
    return out[0] if single else out


def copula_density(params: CopulaParams, u, **kw) -> np.ndarray:
    return np.exp(copula_log_density(params, u, **kw))


def copula_cdf(params: CopulaParams, u, v):
    """Bivariate C(u, v).  Archimedean: closed form; others: numerical integration."""
    if params.dim != 2:
        raise CopulaError("copula_cdf is bivariate")
    if params.family in ARCHIMEDEAN:
        out = archimedean.cdf(params, u, v)
        return float(out) if np.ndim(out) == 0 else out
    mod = _module(params.family)
    if np.ndim(u) == 0 and np.ndim(v) == 0:
        return mod.cdf(params, float(u), float(v))
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    return np.array([mod.cdf(params, a, b) for a, b in zip(u.ravel(), v.ravel())]).reshape(u.shape)


def copula_cdf_grid(params: CopulaParams, u_nodes, v_nodes) -> np.ndarray:
    """C(u_i, v_j) for all grid pairs (bivariate)."""
    if params.dim != 2:
        raise CopulaError("copula_cdf_grid is bivariate")
    u_nodes = np.asarray(u_nodes, dtype=float)
    v_nodes = np.asarray(v_nodes, dtype=float)
    if params.family in ARCHIMEDEAN:
        return archimedean.cdf(params, u_nodes[:, None], v_nodes[None, :])
    # boundary rows/columns are exact: C(0, v) = C(u, 0) = 0, C(1, v) = v, C(u, 1) = u
    iu = (u_nodes > 0) & (u_nodes < 1)
    iv = (v_nodes > 0) & (v_nodes < 1)
    out = np.minimum(np.clip(u_nodes, 0, 1)[:, None], np.clip(v_nodes, 0, 1)[None, :])
    out[(u_nodes <= 0)[:, None] | (v_nodes <= 0)[None, :]] = 0.0
    if iu.any() and iv.any():
        out[np.ix_(iu, iv)] = _module(params.family).cdf_grid(params, u_nodes[iu], v_nodes[iv])
    return out


def sample_copula(params: CopulaParams, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` points from the copula; deterministic given ``seed``."""
    if n < 1:
        raise CopulaError("n must be >= 1")
    rng = as_rng(seed)
    u = _module(params.family).sample(params, int(n), rng)
    return np.clip(u, CLAMP, 1.0 - CLAMP)


def copula_log_density_grid(params: CopulaParams, nodes) -> np.ndarray:
    """log c(nodes[i], nodes[j]) on a tensor grid (bivariate).

    Latent quantiles are computed once per axis node for the elliptical and
    skew-t families.
    """
    if params.dim != 2:
        raise CopulaError("copula_log_density_grid is bivariate")
    nodes = np.clip(np.asarray(nodes, dtype=float), CLAMP, 1.0 - CLAMP)
    n = nodes.size
    if params.family in ARCHIMEDEAN:
        uu, vv = np.meshgrid(nodes, nodes, indexing="ij")
        return archimedean.log_density(params, np.column_stack([uu.ravel(), vv.ravel()])).reshape(n, n)
    if params.family == "skew_t":
        alphas = skewt.marginal_alphas(params)
        x1 = skewt.marginal(alphas[0], params.nu).quantile(nodes)
        x2 = skewt.marginal(alphas[1], params.nu).quantile(nodes)
        m1 = skewt.skewt1_logpdf(x1, alphas[0], params.nu)
        m2 = skewt.skewt1_logpdf(x2, alphas[1], params.nu)
        xx, yy = np.meshgrid(x1, x2, indexing="ij")
        joint = skewt.joint_logpdf(params, np.column_stack([xx.ravel(), yy.ravel()])).reshape(n, n)
        return joint - m1[:, None] - m2[None, :]
    x = elliptical.latent_quantile(params, nodes)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    rho = params.rho
    q = (xx * xx - 2.0 * rho * xx * yy + yy * yy) / (1.0 - rho * rho)
    if params.family == "gaussian":
        return -0.5 * np.log1p(-rho * rho) - 0.5 * (q - xx * xx - yy * yy)
    from scipy.special import gammaln

    nu = params.nu
    const = gammaln(0.5 * (nu + 2)) + gammaln(0.5 * nu) - 2.0 * gammaln(0.5 * (nu + 1))
    lm = 0.5 * (nu + 1) * np.log1p(x * x / nu)
    return (const - 0.5 * np.log1p(-rho * rho) - 0.5 * (nu + 2) * np.log1p(q / nu)
            + lm[:, None] + lm[None, :])
