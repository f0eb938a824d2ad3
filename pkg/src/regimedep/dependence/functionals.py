"""Model-based dependence functionals of a fitted bivariate copula.

Rank correlations, tail-dependence indices, the mutual-information index
``delta^2 = 1 - exp(-2 I)`` with ``I = E[log c]``, and the Hellinger
correlation ``1 - integral of sqrt(c)``.  Divergence integrals use tensor
Gauss-Legendre quadrature in normal-score coordinates over ``[eps, 1-eps]^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri, stdtr

from .._numerics import as_rng, gauss_legendre, gl_panels
from ..copulas import skewt
from ..copulas.archimedean import kendall_tau as _archimedean_tau
from ..copulas.archimedean import tail_dependence as _archimedean_tail
from ..copulas.base import ARCHIMEDEAN, CopulaError, CopulaParams
from ..copulas.families import copula_cdf, copula_cdf_grid, copula_log_density_grid, sample_copula
from .rank import sample_kendall_tau

EPS = 1e-4
N_NODES = 128
DOUBLING_TOL = 1e-3
MAX_NODES = 1024
RHO_PANELS = 8
RHO_NODES = 16
TAIL_LEVELS = (1e-2, 1e-3, 1e-4)
MC_TAU_N = 200_000
MC_TAU_BATCHES = 20


class QuadratureError(RuntimeError):
    pass


def _params(fit) -> CopulaParams:
    p = getattr(fit, "params", fit)
    if not isinstance(p, CopulaParams):
        raise CopulaError("expected a CopulaFit or CopulaParams")
    if p.dim != 2:
        raise CopulaError("functionals are defined for bivariate copulas")
    return p


# ------------------------------------------------------------- rank measures
def copula_spearman_rho(fit) -> float:
    """``12 * integral of C - 3``: closed form for the Gaussian copula, otherwise
    composite Gauss-Legendre quadrature of ``C - uv`` (128 nodes per axis)."""
    p = _params(fit)
    if p.family == "gaussian":
        return float(6.0 / np.pi * np.arcsin(0.5 * p.rho))
    nodes, weights = gl_panels(np.linspace(0.0, 1.0, RHO_PANELS + 1), RHO_NODES)
    x, w = nodes.ravel(), weights.ravel()
    C = copula_cdf_grid(p, x, x)
    val = 12.0 * float(w @ (C - np.outer(x, x)) @ w)
    return float(np.clip(val, -1.0, 1.0))


@dataclass(frozen=True)
class TauEstimate:
    value: float
    se: float
    method: str


def copula_kendall_tau(fit, *, seed: int = 0, n: int = MC_TAU_N) -> TauEstimate:
    """Closed forms (elliptical, Archimedean); Monte Carlo with batch SE for skew-t."""
    p = _params(fit)
    if p.family in ("gaussian", "student_t"):
        return TauEstimate(float(2.0 / np.pi * np.arcsin(p.rho)), 0.0, "closed_form")
    if p.family in ARCHIMEDEAN:
        method = "quadrature" if p.family == "frank" else "closed_form"
        return TauEstimate(float(_archimedean_tau(p)), 0.0, method)
    u = sample_copula(p, n, as_rng(seed))
    batches = np.array_split(u, MC_TAU_BATCHES)
    vals = np.array([sample_kendall_tau(b[:, 0], b[:, 1]) for b in batches])
    full = sample_kendall_tau(u[:, 0], u[:, 1])
    se = float(np.std(vals, ddof=1) / np.sqrt(MC_TAU_BATCHES))
    return TauEstimate(float(full), se, "sample")


# ----------------------------------------------------------- tail dependence
@dataclass(frozen=True)
class TailEstimate:
    lambda_l: float
    lambda_u: float
    method: str
    bracket_l: tuple[float, float] | None = None
    bracket_u: tuple[float, float] | None = None


def _aitken(s: np.ndarray) -> float:
    d1, d2 = s[1] - s[0], s[2] - s[1]
    den = d2 - d1
    if abs(den) < 1e-15 or d1 * d2 <= 0:
        return float(s[2])
    return float(s[2] - d2 * d2 / den)


def _limit(seq) -> tuple[float, tuple[float, float]]:
    s = np.asarray(seq, dtype=float)
    est = float(np.clip(_aitken(s), 0.0, 1.0))
    lo = float(np.clip(min(s[-1], est), 0.0, 1.0))
    hi = float(np.clip(max(s[-1], est), 0.0, 1.0))
    return est, (lo, hi)


def tail_dependence_numeric(fit, levels=TAIL_LEVELS) -> TailEstimate:
    """``C(v, v) / v`` and ``P(U > 1-v, V > 1-v) / v`` at shrinking ``v``, Aitken-extrapolated."""
    p = _params(fit)
    lower, upper = [], []
    for v in levels:
        lower.append(float(copula_cdf(p, v, v)) / v)
        if p.family == "skew_t":
            upper.append(skewt.joint_upper(p, 1.0 - v, 1.0 - v) / v)
        else:
            w = 1.0 - v
            upper.append((1.0 - 2.0 * w + float(copula_cdf(p, w, w))) / v)
    ll, bl = _limit(lower)
    lu, bu = _limit(upper)
    return TailEstimate(ll, lu, "limit_extrapolation", bl, bu)


def tail_dependence(fit) -> TailEstimate:
    """Closed forms for all families except skew-t (numerical limit)."""
    p = _params(fit)
    if p.family == "gaussian":
        return TailEstimate(0.0, 0.0, "closed_form")
    if p.family == "student_t":
        nu, rho = p.nu, p.rho
        lam = 2.0 * stdtr(nu + 1.0, -np.sqrt((nu + 1.0) * (1.0 - rho) / (1.0 + rho)))
        return TailEstimate(float(lam), float(lam), "closed_form")
    if p.family in ARCHIMEDEAN:
        ll, lu = _archimedean_tail(p)
        return TailEstimate(float(ll), float(lu), "closed_form")
    return tail_dependence_numeric(p)


def student_t_tail(rho: float, nu: float) -> float:
    """``2 T_{nu+1}(-sqrt((nu+1)(1-rho)/(1+rho)))``; valid for any ``nu > 0``."""
    return float(2.0 * stdtr(nu + 1.0, -np.sqrt((nu + 1.0) * (1.0 - rho) / (1.0 + rho))))


# -------------------------------------------------- divergence from independence
def _score_grid(n: int):
    a = float(ndtri(EPS))
    x, w = gauss_legendre(n)
    z = a * x  # nodes on [a, -a]
    wz = -a * w * np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    return ndtr(z), wz


def _integrate(p: CopulaParams, g, n: int) -> float:
    u, w = _score_grid(n)
    vals = g(copula_log_density_grid(p, u))
    return float(w @ vals @ w)


def _checked(p: CopulaParams, g, n: int) -> float:
    """Node-doubling check; strongly concentrated densities escalate up to MAX_NODES."""
    coarse = _integrate(p, g, n)
    while True:
        fine = _integrate(p, g, 2 * n)
        if np.isfinite(fine) and abs(fine - coarse) <= DOUBLING_TOL:
            return fine
        n *= 2
        if 2 * n > MAX_NODES:
            raise QuadratureError(f"quadrature did not converge ({coarse:.6g} vs {fine:.6g})")
        coarse = fine


def _c_log_c(logc):
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.exp(logc) * logc
    return np.where(np.isneginf(logc), 0.0, out)


def _one_minus_sqrt_c(logc):
    return -np.expm1(0.5 * logc)


def mutual_information(fit, n: int = N_NODES) -> float:
    """``I = integral of c log c`` over the truncated square."""
    return max(_checked(_params(fit), _c_log_c, n), 0.0)


def mutual_information_delta2(fit, n: int = N_NODES) -> float:
    """``delta^2 = 1 - exp(-2 I)``, clamped to [0, 1]."""
    return float(np.clip(-np.expm1(-2.0 * mutual_information(fit, n)), 0.0, 1.0))


def hellinger_correlation(fit, n: int = N_NODES) -> float:
    """``1 - integral of sqrt(c)``, clamped to [0, 1]."""
    return float(np.clip(_checked(_params(fit), _one_minus_sqrt_c, n), 0.0, 1.0))


def bhattacharya_s_rho(fit, n: int = N_NODES) -> float:
    """``integral of (1 - sqrt(c))``: the same integral as the Hellinger correlation."""
    return hellinger_correlation(fit, n)


# -------------------------------------------------------------------- bundle
FUNCTIONALS = ("rho_s", "tau", "lambda_l", "lambda_u", "delta2", "h2")


@dataclass
class FunctionalSet:
    rho_s: float
    tau: float
    lambda_l: float
    lambda_u: float
    delta2: float
    h2: float
    s_rho: float
    methods: dict[str, str]
    extra: dict[str, object] = field(default_factory=dict)

    def as_dict(self) -> dict[str, float]:
        return {k: float(getattr(self, k)) for k in FUNCTIONALS}


def functional_set(fit, *, seed: int = 0, n_nodes: int = N_NODES, mc_n: int = MC_TAU_N,
                   extras: bool = True) -> FunctionalSet:
    """All six functionals plus S_rho, with method tags.

    With ``extras`` the numerical tail limit of t-type copulas is also recorded
    in ``extra``; bootstrap replicates switch it off.
    """
    p = _params(fit)
    rho_s = copula_spearman_rho(p)
    tau = copula_kendall_tau(p, seed=seed, n=mc_n)
    tail = tail_dependence(p)
    d2 = mutual_information_delta2(p, n_nodes)
    h2 = hellinger_correlation(p, n_nodes)
    methods = {
        "rho_s": "closed_form" if p.family == "gaussian" else "quadrature",
        "tau": tau.method,
        "lambda_l": tail.method,
        "lambda_u": tail.method,
        "delta2": "quadrature",
        "h2": "quadrature",
    }
    extra: dict[str, object] = {"tau_se": tau.se}
    if p.family == "skew_t":
        extra["lambda_l_bracket"] = tail.bracket_l
        extra["lambda_u_bracket"] = tail.bracket_u
    elif p.family == "student_t" and extras:
        num = tail_dependence_numeric(p)
        extra["lambda_numeric"] = (num.lambda_l, num.lambda_u)
    return FunctionalSet(rho_s, tau.value, tail.lambda_l, tail.lambda_u, d2, h2, h2, methods, extra)
