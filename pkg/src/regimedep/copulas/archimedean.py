"""Clayton, Gumbel and Frank copulas.

Densities in dimension d use ``c(u) = |psi^(d)(sum phi(u_j))| * prod |phi'(u_j)|``
with ``psi`` the generator and ``phi`` its inverse.  Gumbel generator derivatives
come from partial Bell polynomials (all terms share one sign, so there is no
cancellation); Frank derivatives from polylogarithms of negative order.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .base import CopulaParams

SMALL_THETA = 1e-8


# --------------------------------------------------------------------- Clayton
def _clayton_log_density(theta: float, u: np.ndarray) -> np.ndarray:
    d = u.shape[1]
    if abs(theta) < SMALL_THETA:
        return np.zeros(u.shape[0])
    logu = np.log(u)
    s = np.sum(np.exp(-theta * logu), axis=1) - d + 1.0
    out = np.full(u.shape[0], -np.inf)
    ok = s > 0
    coef = np.sum(np.log1p(theta * np.arange(d)))
    out[ok] = (coef - (1.0 + theta) * np.sum(logu[ok], axis=1)
               - (d + 1.0 / theta) * np.log(s[ok]))
    return out


def _clayton_cdf(theta, u, v):
    if abs(theta) < SMALL_THETA:
        return u * v
    s = u ** (-theta) + v ** (-theta) - 1.0
    return np.where(s > 0, np.maximum(s, 1e-300) ** (-1.0 / theta), 0.0)


# ---------------------------------------------------------------------- Gumbel
@lru_cache(maxsize=32)
def _falling_abs(alpha: float, n: int) -> np.ndarray:
    """|alpha (alpha-1) ... (alpha-k+1)| for k = 1..n (log scale)."""
    out = np.empty(n)
    acc = 0.0
    for k in range(1, n + 1):
        acc += np.log(abs(alpha - (k - 1)))
        out[k - 1] = acc
    return out


def _log_partial_bell(log_a: np.ndarray, n: int) -> np.ndarray:
    """log B_{n,m}(a_1, a_2, ...) for m = 1..n with positive a (given as logs)."""
    # B[k][m], k = 0..n; recursion B_{k,m} = sum_{i=1}^{k-m+1} C(k-1, i-1) a_i B_{k-i, m-1}
    neg = -np.inf
    B = np.full((n + 1, n + 1), neg)
    B[0, 0] = 0.0
    for k in range(1, n + 1):
        for m in range(1, k + 1):
            terms = []
            for i in range(1, k - m + 2):
                if B[k - i, m - 1] == neg:
                    continue
                logc = gammaln(k) - gammaln(i) - gammaln(k - i + 1)
                terms.append(logc + log_a[i - 1] + B[k - i, m - 1])
            if terms:
                B[k, m] = logsumexp(terms)
    return B[n, 1:]


def _gumbel_log_density(theta: float, u: np.ndarray) -> np.ndarray:
    d = u.shape[1]
    if theta == 1.0:
        return np.zeros(u.shape[0])
    alpha = 1.0 / theta
    x = -np.log(u)
    logx = np.log(x)
    s = np.sum(np.exp(theta * logx), axis=1)
    logs = np.log(s)
    # psi(s) = exp(-s^alpha); |psi^(d)(s)| = psi(s) * s^-d * sum_m s^(alpha m) B_{d,m}(|a|)
    log_bell = _log_partial_bell(_falling_abs(alpha, d), d)
    m = np.arange(1, d + 1)
    log_poly = logsumexp(log_bell[None, :] + alpha * m[None, :] * logs[:, None], axis=1)
    log_psi_d = -np.exp(alpha * logs) - d * logs + log_poly
    # |phi'(u)| = theta x^(theta-1) / u
    log_dphi = np.log(theta) + (theta - 1.0) * logx + x
    return log_psi_d + np.sum(log_dphi, axis=1)


def _gumbel_cdf(theta, u, v):
    s = (-np.log(u)) ** theta + (-np.log(v)) ** theta
    return np.exp(-s ** (1.0 / theta))


# ----------------------------------------------------------------------- Frank
@lru_cache(maxsize=32)
def _eulerian(k: int) -> np.ndarray:
    """Eulerian numbers A(k, i), i = 0..k-1."""
    row = np.array([1.0])
    for n in range(2, k + 1):
        new = np.zeros(n)
        for i in range(n):
            a = (i + 1) * row[i] if i < n - 1 else 0.0
            b = (n - i) * row[i - 1] if i >= 1 else 0.0
            new[i] = a + b
        row = new
    return row


def _log_abs_polylog_neg(order_k: int, x: np.ndarray, log1mx: np.ndarray) -> np.ndarray:
    """log|Li_{-k}(x)| for k >= 0 and x < 1, given log(1 - x)."""
    if order_k == 0:
        return np.log(np.abs(x)) - log1mx
    A = _eulerian(order_k)
    poly = np.polynomial.polynomial.polyval(x, A)  # sum_i A(k,i) x^i
    return np.log(np.abs(x)) + np.log(np.abs(poly)) - (order_k + 1) * log1mx


def _frank_log_density(theta: float, u: np.ndarray) -> np.ndarray:
    d = u.shape[1]
    if abs(theta) < SMALL_THETA:
        return np.zeros(u.shape[0])
    if d == 2:
        a, b = u[:, 0], u[:, 1]
        em = -np.expm1(-theta)  # 1 - e^-theta
        num = np.log(abs(theta)) + np.log(abs(em)) - theta * (a + b)
        den = em - (-np.expm1(-theta * a)) * (-np.expm1(-theta * b))
        return num - 2.0 * np.log(np.abs(den))
    # d > 2, theta > 0
    # phi(u) = -log((1 - e^{-theta u}) / (1 - e^{-theta}))
    c = -np.expm1(-theta)
    phi = -np.log(-np.expm1(-theta * u)) + np.log(c)
    s = np.sum(phi, axis=1)
    x = c * np.exp(-s)
    log1mx = np.log(-np.expm1(-s) + np.exp(-theta - s))  # 1 - (1 - e^-theta) e^-s
    log_psi_d = -np.log(theta) + _log_abs_polylog_neg(d - 1, x, log1mx)
    # |phi'(u)| = theta e^{-theta u} / (1 - e^{-theta u})
    log_dphi = np.log(theta) - theta * u - np.log(-np.expm1(-theta * u))
    return log_psi_d + np.sum(log_dphi, axis=1)


def _frank_cdf(theta, u, v):
    if abs(theta) < SMALL_THETA:
        return u * v
    num = np.expm1(-theta * u) * np.expm1(-theta * v)
    return -np.log1p(num / np.expm1(-theta)) / theta


# ------------------------------------------------------------------- dispatch
def log_density(p: CopulaParams, u: np.ndarray) -> np.ndarray:
    if p.family == "clayton":
        return _clayton_log_density(p.theta, u)
    if p.family == "gumbel":
        return _gumbel_log_density(p.theta, u)
    return _frank_log_density(p.theta, u)


def cdf(p: CopulaParams, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    uc = np.clip(u, 1e-300, 1.0)
    vc = np.clip(v, 1e-300, 1.0)
    if p.family == "clayton":
        out = _clayton_cdf(p.theta, uc, vc)
    elif p.family == "gumbel":
        out = _gumbel_cdf(p.theta, uc, vc)
    else:
        out = _frank_cdf(p.theta, uc, vc)
    out = np.where((u <= 0) | (v <= 0), 0.0, out)
    return np.clip(out, np.maximum(u + v - 1.0, 0.0), np.minimum(u, v))


def h_inverse(p: CopulaParams, w, u):
    """Inverse conditional cdf v = C^{-1}(w | u) for bivariate Clayton / Frank."""
    th = p.theta
    if p.family == "clayton":
        return ((w ** (-th / (1.0 + th)) - 1.0) * u ** (-th) + 1.0) ** (-1.0 / th)
    if p.family == "frank":
        return -np.log1p(w * np.expm1(-th) / (w + (1.0 - w) * np.exp(-th * u))) / th
    raise ValueError("conditional inversion implemented for clayton and frank only")


def _positive_stable(alpha: float, size, rng) -> np.ndarray:
    """Kanter's representation; Laplace transform exp(-s^alpha)."""
    U = rng.uniform(0.0, np.pi, size=size)
    E = rng.exponential(size=size)
    a = (np.sin(alpha * U) ** alpha * np.sin((1.0 - alpha) * U) ** (1.0 - alpha) / np.sin(U)) ** (1.0 / (1.0 - alpha))
    return (a / E) ** ((1.0 - alpha) / alpha)


def sample(p: CopulaParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Marshall-Olkin frailty sampling; conditional inversion for negative bivariate theta."""
    d, th = p.dim, p.theta
    if p.family in ("clayton", "frank") and th < 0:
        u = rng.uniform(size=n)
        w = rng.uniform(size=n)
        return np.column_stack([u, h_inverse(p, w, u)])
    E = rng.exponential(size=(n, d))
    if p.family == "clayton":
        V = rng.gamma(1.0 / th, size=(n, 1))
        return (1.0 + E / V) ** (-1.0 / th)
    if p.family == "gumbel":
        if th == 1.0:
            return rng.uniform(size=(n, d))
        alpha = 1.0 / th
        V = _positive_stable(alpha, (n, 1), rng)
        return np.exp(-((E / V) ** alpha))
    # frank, theta > 0: logarithmic-series frailty
    pr = min(-np.expm1(-th), np.nextafter(1.0, 0.0))
    V = rng.logseries(pr, size=(n, 1)).astype(float)
    return -np.log1p(-pr * np.exp(-E / V)) / th


def kendall_tau(p: CopulaParams) -> float:
    from scipy import integrate

    th = p.theta
    if p.family == "clayton":
        return th / (th + 2.0)
    if p.family == "gumbel":
        return 1.0 - 1.0 / th
    debye, _ = integrate.quad(lambda t: t / np.expm1(t) if t != 0 else 1.0, 0.0, th,
                              epsabs=1e-13, epsrel=1e-12)
    d1 = debye / th
    return 1.0 - 4.0 / th * (1.0 - d1)


def tail_dependence(p: CopulaParams) -> tuple[float, float]:
    th = p.theta
    if p.family == "clayton":
        return (2.0 ** (-1.0 / th) if th > 0 else 0.0), 0.0
    if p.family == "gumbel":
        return 0.0, 2.0 - 2.0 ** (1.0 / th)
    return 0.0, 0.0
