"""Small numerical helpers shared across modules."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import expit


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1] (cached, read-only)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gl_on_interval(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def gl_panels(breaks: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on consecutive panels.

    Returns nodes and weights shaped ``(len(breaks) - 1, n)``.
    """
    x, w = gauss_legendre(n)
    breaks = np.asarray(breaks, dtype=float)
    lo = breaks[:-1, None]
    half = 0.5 * (breaks[1:, None] - lo)
    return lo + half * (x + 1.0), half * w


def numerical_hessian(f, x: np.ndarray, rel_step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of a scalar function."""
    x = np.asarray(x, dtype=float)
    k = x.size
    h = rel_step * np.maximum(np.abs(x), 1.0)
    hess = np.empty((k, k))
    f0 = f(x)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        hess[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h[j]
            val = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = val
    return hess


def numerical_jacobian(f, x: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(f(x))
    jac = np.empty((f0.size, x.size))
    h = rel_step * np.maximum(np.abs(x), 1.0)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h[i]
        jac[:, i] = (np.atleast_1d(f(x + e)) - np.atleast_1d(f(x - e))) / (2.0 * h[i])
    return jac


def delta_method_se(neg_loglik, z_hat: np.ndarray, to_natural) -> np.ndarray | None:
    """Standard errors of ``to_natural(z)`` from the inverse Hessian in ``z``.

    Returns None when the Hessian is not positive definite.
    """
    hess = numerical_hessian(neg_loglik, z_hat)
    if not np.all(np.isfinite(hess)):
        return None
    hess = 0.5 * (hess + hess.T)
    try:
        np.linalg.cholesky(hess)
    except np.linalg.LinAlgError:
        return None
    cov_z = np.linalg.inv(hess)
    jac = numerical_jacobian(to_natural, z_hat)
    cov = jac @ cov_z @ jac.T
    diag = np.diag(cov)
    if np.any(diag < 0):
        return None
    return np.sqrt(diag)


def logistic(z):
    return expit(z)


def logit(p):
    return np.log(p) - np.log1p(-p)


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
