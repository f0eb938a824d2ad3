"""Maximum pseudo-likelihood fitting and BIC family selection."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import pandas as pd
from scipy.optimize import brentq, minimize
from scipy.special import stdtrit
from scipy.stats import kendalltau

from .._numerics import delta_method_se
from . import archimedean, skewt
from .base import (ARCHIMEDEAN, CLAMP, FAMILIES, NU_MAX, CopulaError, CopulaParams,
                   corr_to_partial, nearest_corr, partial_to_corr)

log = logging.getLogger(__name__)

MIN_T = 50
FAMILY_ORDER = {f: i for i, f in enumerate(FAMILIES)}
_PARTIAL_MAX = 0.999
_NU_LO, _NU_HI = 2.05, NU_MAX


@dataclass
class CopulaFit:
    """Fitted copula member.

    ``bic`` uses the raw convention ``k ln T - 2 loglik``.
    """

    family: str
    params: CopulaParams
    loglik: float
    bic: float
    std_errors: dict[str, float] | None
    source: str
    n_obs: int
    converged: bool = True
    at_boundary: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.params.dim

    @property
    def k(self) -> int:
        return self.params.n_free


# ------------------------------------------------------------ reparameterization
class _Transform:
    """Map between an unconstrained vector ``z`` and :class:`CopulaParams`."""

    def __init__(self, family: str, dim: int):
        self.family = family
        self.dim = dim
        self.n_corr = dim * (dim - 1) // 2 if family not in ARCHIMEDEAN else 0
        self.size = (1 if family in ARCHIMEDEAN else
                     self.n_corr + (family in ("student_t", "skew_t")) + (dim if family == "skew_t" else 0))

    def _corr(self, z):
        return partial_to_corr(_PARTIAL_MAX * np.tanh(z[: self.n_corr]), self.dim)

    def _nu(self, zn):
        return _NU_LO + (_NU_HI - _NU_LO) / (1.0 + np.exp(-zn))

    def params(self, z) -> CopulaParams:
        z = np.asarray(z, dtype=float)
        f, d = self.family, self.dim
        if f == "gaussian":
            return CopulaParams("gaussian", d, corr=self._corr(z))
        if f == "student_t":
            return CopulaParams("student_t", d, corr=self._corr(z), nu=float(self._nu(z[-1])))
        if f == "skew_t":
            R = self._corr(z)
            a = z[self.n_corr + 1:]
            Ra = R @ a
            delta = Ra / np.sqrt(1.0 + a @ Ra)
            return CopulaParams("skew_t", d, corr=R, nu=float(self._nu(z[self.n_corr])), delta=delta)
        t = float(z[0])
        if f == "clayton":
            th = np.exp(t) if d > 2 else -1.0 + np.exp(t)
        elif f == "gumbel":
            th = 1.0 + np.exp(t)
        else:
            th = np.exp(t) if d > 2 else t
        if f != "gumbel" and abs(th) < archimedean.SMALL_THETA:
            th = archimedean.SMALL_THETA
        return CopulaParams(f, d, theta=float(th))

    def inverse(self, p: CopulaParams) -> np.ndarray:
        f = self.family
        if f in ARCHIMEDEAN:
            th = p.theta
            if f == "clayton":
                return np.array([np.log(th) if self.dim > 2 else np.log(th + 1.0)])
            if f == "gumbel":
                return np.array([np.log(max(th - 1.0, 1e-8))])
            return np.array([np.log(th) if self.dim > 2 else th])
        part = np.clip(corr_to_partial(p.corr) / _PARTIAL_MAX, -0.999999, 0.999999)
        z = list(np.arctanh(part))
        if f in ("student_t", "skew_t"):
            r = (min(max(p.nu, _NU_LO + 1e-6), _NU_HI - 1e-6) - _NU_LO) / (_NU_HI - _NU_LO)
            z.append(np.log(r) - np.log1p(-r))
        if f == "skew_t":
            z.extend(p.alpha)
        return np.asarray(z, dtype=float)

    def natural(self, z) -> np.ndarray:
        return np.array(list(self.params(z).named_values().values()))


# ------------------------------------------------------------- log-likelihood
class _Objective:
    """Negative pseudo-log-likelihood, caching t quantiles across calls with equal nu."""

    def __init__(self, tr: _Transform, u: np.ndarray):
        self.tr = tr
        self.u = u
        self._nu = None
        self._x = None
        self.ncalls = 0

    def _t_scores(self, nu):
        if nu != self._nu:
            self._nu = nu
            self._x = stdtrit(nu, self.u)
        return self._x

    def loglik(self, p: CopulaParams) -> float:
        from .families import copula_log_density

        if p.family == "student_t":
            return float(np.sum(_t_log_density(p, self._t_scores(p.nu))))
        return float(np.sum(copula_log_density(p, self.u)))

    def __call__(self, z) -> float:
        self.ncalls += 1
        try:
            with np.errstate(all="ignore"):
                val = -self.loglik(self.tr.params(z))
        except (CopulaError, np.linalg.LinAlgError, ValueError, FloatingPointError):
            return 1e12
        return val if np.isfinite(val) else 1e12


def _t_log_density(p: CopulaParams, x: np.ndarray) -> np.ndarray:
    from scipy.special import gammaln

    d, nu = p.dim, p.nu
    L = np.linalg.cholesky(p.corr)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    w = np.linalg.solve(L, x.T).T
    quad = np.sum(w * w, axis=1)
    const = gammaln(0.5 * (nu + d)) + (d - 1) * gammaln(0.5 * nu) - d * gammaln(0.5 * (nu + 1))
    return (const - 0.5 * logdet - 0.5 * (nu + d) * np.log1p(quad / nu)
            + 0.5 * (nu + 1) * np.sum(np.log1p(x * x / nu), axis=1))


# -------------------------------------------------------------- start values
def _pairwise_tau(u: np.ndarray) -> np.ndarray:
    d = u.shape[1]
    tau = np.eye(d)
    for i, j in combinations(range(d), 2):
        tau[i, j] = tau[j, i] = kendalltau(u[:, i], u[:, j])[0]
    return tau


def _frank_theta_from_tau(tau: float) -> float:
    tau = float(np.clip(tau, -0.95, 0.95))
    if abs(tau) < 0.01:
        # tau ~ theta / 9 near independence
        return 9.0 * tau if abs(tau) > 1e-4 else (1e-3 if tau >= 0 else -1e-3)
    f = lambda th: archimedean.kendall_tau(CopulaParams.archimedean("frank", th)) - tau
    return brentq(f, 1e-3, 200.0) if tau > 0 else brentq(f, -200.0, -1e-3)


def _start(family: str, dim: int, tau: np.ndarray) -> CopulaParams:
    iu = np.triu_indices(dim, 1)
    tbar = float(np.mean(tau[iu]))
    if family in ("gaussian", "student_t", "skew_t"):
        R = nearest_corr(np.sin(0.5 * np.pi * tau))
        if family == "gaussian":
            return CopulaParams("gaussian", dim, corr=R)
        if family == "student_t":
            return CopulaParams("student_t", dim, corr=R, nu=8.0)
        return CopulaParams("skew_t", dim, corr=R, nu=8.0, delta=np.zeros(dim))
    pos = dim > 2
    if family == "clayton":
        t = max(tbar, 0.02) if pos else float(np.clip(tbar, -0.3, 0.95))
        th = 2.0 * t / (1.0 - t)
        th = th if abs(th) > 1e-3 else 1e-3
        return CopulaParams.archimedean("clayton", th, dim)
    if family == "gumbel":
        return CopulaParams.archimedean("gumbel", 1.0 / (1.0 - float(np.clip(tbar, 0.01, 0.95))), dim)
    th = _frank_theta_from_tau(max(tbar, 0.01) if pos else tbar)
    return CopulaParams.archimedean("frank", th, dim)


# -------------------------------------------------------------------- fitting
def _boundary(p: CopulaParams) -> list[str]:
    out = []
    if p.corr is not None:
        part = corr_to_partial(p.corr)
        if np.any(np.abs(part) > 0.995 * _PARTIAL_MAX):
            out.append("correlation near +-1")
    if p.nu is not None:
        if p.nu > _NU_HI - 0.5:
            out.append(f"nu at upper bound {_NU_HI:g}")
        elif p.nu < _NU_LO + 0.02:
            out.append(f"nu at lower bound {_NU_LO:g}")
    if p.family == "clayton" and p.dim == 2 and p.theta < -0.99:
        out.append("theta near -1")
    if p.family == "gumbel" and p.theta < 1.0 + 1e-4:
        out.append("theta at independence bound 1")
    return out


def fit_copula(family: str, u, *, start: CopulaParams | None = None, std_errors: bool = True,
               maxiter: int = 300) -> CopulaFit:
    """Maximum pseudo-likelihood fit of one family.

    ``u`` is a :class:`PseudoSample` or an ``n x d`` array in (0, 1).  Values are
    clamped to [1e-10, 1 - 1e-10].  Standard errors come from the inverse
    numerical Hessian (delta method back to the natural parameters).
    """
    if family not in FAMILIES:
        raise CopulaError(f"unknown copula family {family!r}")
    source = getattr(u, "source", "array")
    values = np.asarray(getattr(u, "values", u), dtype=float)
    if values.ndim != 2 or values.shape[1] < 2:
        raise CopulaError("pseudo-sample must be n x d with d >= 2")
    T, d = values.shape
    if T < MIN_T:
        raise CopulaError(f"need T >= {MIN_T} observations, got {T}")
    if not np.all((values > 0) & (values < 1)):
        raise CopulaError("pseudo-observations must lie strictly inside (0, 1)")
    values = np.clip(values, CLAMP, 1.0 - CLAMP)

    tr = _Transform(family, d)
    obj = _Objective(tr, values)
    if start is None:
        start = _start(family, d, _pairwise_tau(values))
    starts = [tr.inverse(start)]
    if family == "student_t":
        # profile a few nu values at the starting correlation
        for nu in (4.0, 15.0, 40.0):
            starts.append(tr.inverse(CopulaParams("student_t", d, corr=start.corr, nu=nu)))
    if family in ("clayton", "frank") and d == 2:
        starts.append(-starts[0] if family == "frank" else np.array([np.log(0.5)]))
    vals = [obj(z) for z in starts]
    z0 = starts[int(np.argmin(vals))]

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if tr.size == 1:
            res = minimize(obj, z0, method="Nelder-Mead",
                           options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": maxiter * 2})
        else:
            res = minimize(obj, z0, method="BFGS", options={"gtol": 1e-4, "maxiter": maxiter})
            # status 2 (precision loss) at a flat optimum is accepted
            if res.status not in (0, 2) or res.fun >= 1e12:
                res_nm = minimize(obj, res.x, method="Nelder-Mead",
                                  options={"maxiter": 200 * tr.size, "xatol": 1e-7, "fatol": 1e-9})
                if res_nm.fun < res.fun:
                    res = res_nm
    if not np.isfinite(res.fun) or res.fun >= 1e12:
        raise CopulaError(f"{family}: optimizer failed to converge")

    z_hat = res.x
    params = tr.params(z_hat)
    loglik = -float(res.fun)
    notes = _boundary(params)
    se = _std_errors(obj, tr, z_hat, params, notes) if std_errors else None
    converged = bool(res.success) or res.status == 2
    bic = params.n_free * np.log(T) - 2.0 * loglik
    return CopulaFit(family, params, loglik, float(bic), se, source, T, converged, bool(notes and any(
        "bound" in n or "near" in n for n in notes)), notes)


def _std_errors(obj, tr, z_hat, params, notes) -> dict[str, float] | None:
    with np.errstate(all="ignore"):
        se_vec = delta_method_se(obj, z_hat, tr.natural)
    if se_vec is None:
        notes.append("Hessian not positive definite; standard errors unavailable")
        return None
    return dict(zip(params.named_values(), map(float, se_vec)))


def attach_std_errors(fit: CopulaFit, u) -> CopulaFit:
    """Fill ``fit.std_errors`` from the inverse Hessian at the fitted parameters."""
    values = np.clip(np.asarray(getattr(u, "values", u), dtype=float), CLAMP, 1.0 - CLAMP)
    tr = _Transform(fit.family, fit.dim)
    obj = _Objective(tr, values)
    fit.std_errors = _std_errors(obj, tr, tr.inverse(fit.params), fit.params, fit.notes)
    return fit


# ------------------------------------------------------------------ selection
@dataclass
class CopulaSelection:
    best: CopulaFit
    table: pd.DataFrame
    fits: dict[str, CopulaFit]
    failures: dict[str, str] = field(default_factory=dict)


def select_copula(u, families=FAMILIES, *, std_errors: bool = True) -> CopulaSelection:
    """Fit each family and return the lowest-BIC member with the full table.

    Standard errors are computed for the selected member only.

    Ties break toward fewer parameters, then the fixed family order.  In
    dimension > 2 Clayton and Frank are restricted to theta > 0.
    """
    families = list(dict.fromkeys(families))
    if len(families) < 2:
        raise CopulaError("need at least two families to select among")
    values = np.asarray(getattr(u, "values", u), dtype=float)
    tau = _pairwise_tau(np.clip(values, CLAMP, 1 - CLAMP))
    fits: dict[str, CopulaFit] = {}
    failures: dict[str, str] = {}
    for fam in sorted(families, key=FAMILY_ORDER.__getitem__):
        try:
            start = None
            if fam == "skew_t" and "student_t" in fits:
                tp = fits["student_t"].params
                start = CopulaParams("skew_t", tp.dim, corr=tp.corr, nu=tp.nu, delta=np.zeros(tp.dim))
            elif fam != "skew_t":
                start = _start(fam, values.shape[1], tau)
            fits[fam] = fit_copula(fam, u, start=start, std_errors=False)
        except CopulaError as exc:
            log.warning("copula %s failed: %s", fam, exc)
            failures[fam] = str(exc)
    if not fits:
        raise CopulaError("all copula fits failed")
    rows = [{"family": f, "k": fit.k, "loglik": fit.loglik, "bic": fit.bic,
             "at_boundary": fit.at_boundary} for f, fit in fits.items()]
    table = pd.DataFrame(rows)
    order = table.assign(_o=table["family"].map(FAMILY_ORDER)).sort_values(
        ["bic", "k", "_o"], kind="mergesort")
    table["selected"] = False
    table.loc[order.index[0], "selected"] = True
    best = fits[order.iloc[0]["family"]]
    if std_errors:
        attach_std_errors(best, u)
    return CopulaSelection(best, table, fits, failures)


# ----------------------------------------------------------------- two-step
@dataclass
class TwoStepResult:
    mode: str
    pseudo: object  # PseudoSample
    marginals: list | None  # GarchSelection per asset (parametric mode)
    joint: CopulaSelection
    pairs: dict[tuple[int, int], CopulaSelection]

    def pair_labels(self) -> dict[tuple[int, int], str]:
        ids = self.pseudo.asset_ids or tuple(str(i) for i in range(self.pseudo.d))
        return {(i, j): f"{ids[i]}-{ids[j]}" for i, j in self.pairs}


def two_step_fit(panel, mode: str = "semiparametric", families=FAMILIES, *,
                 marginals=None, garch_options: dict | None = None,
                 std_errors: bool = True) -> TwoStepResult:
    """Pseudo-observations (PIT of selected GARCH fits or rescaled ranks), then
    copula selection for the d-variate sample and every pair.

    ``marginals`` may pass precomputed per-asset GARCH selections for the
    parametric mode.
    """
    from ..marginals import ecdf_pseudo_obs, pit_pseudo_obs, select_garch

    if mode not in ("parametric", "semiparametric"):
        raise CopulaError(f"unknown mode {mode!r}")
    if mode == "parametric":
        if marginals is None:
            opts = garch_options or {}
            marginals = [select_garch(panel.returns[:, j], **opts) for j in range(panel.d)]
        pseudo = pit_pseudo_obs(panel, [m.best for m in marginals])
    else:
        marginals = None
        pseudo = ecdf_pseudo_obs(panel)
    joint = select_copula(pseudo, families, std_errors=std_errors)
    pairs = {(i, j): select_copula(pseudo.pair(i, j), families, std_errors=std_errors)
             for i, j in combinations(range(pseudo.d), 2)}
    return TwoStepResult(mode, pseudo, marginals, joint, pairs)
