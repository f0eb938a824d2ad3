"""Zero-mean GARCH(p, q) volatility models with standardized innovations."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import minimize
from scipy.signal import lfilter, lfiltic
from scipy.special import expit, softmax

from .._numerics import as_rng, delta_method_se
from .innovations import FAMILIES, InnovationDistribution, InnovationSpec

log = logging.getLogger(__name__)

NU_MAX = 100.0
FAMILY_ORDER = {f: i for i, f in enumerate(("gaussian", "student_t", "skew_gaussian", "skew_t"))}


class GarchError(ValueError):
    pass


@dataclass(frozen=True)
class GarchSpec:
    p: int = 1
    q: int = 1
    innovation: str = "gaussian"

    def __post_init__(self):
        if self.p < 0 or self.q < 0 or self.p + self.q < 1:
            raise GarchError("need p >= 0, q >= 0, p + q >= 1")
        if self.innovation not in FAMILIES:
            raise GarchError(f"unknown innovation family {self.innovation!r}")

    @property
    def n_params(self) -> int:
        extra = InnovationSpec(self.innovation, nu=5.0, lam=1.0).n_params
        return 1 + self.p + self.q + extra

    def label(self) -> str:
        return f"GARCH({self.p},{self.q})-{self.innovation}"


@dataclass(frozen=True)
class GarchParams:
    alpha0: float
    alpha: tuple[float, ...] = ()
    beta: tuple[float, ...] = ()
    nu: float | None = None
    lam: float | None = None

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise GarchError("alpha0 must be > 0")
        if any(a < 0 for a in self.alpha) or any(b < 0 for b in self.beta):
            raise GarchError("ARCH/GARCH coefficients must be nonnegative")

    @property
    def persistence(self) -> float:
        return float(sum(self.alpha) + sum(self.beta))

    @property
    def stationary(self) -> bool:
        return self.persistence < 1.0

    def unconditional_variance(self) -> float:
        if not self.stationary:
            raise GarchError("nonstationary parameters: sum(alpha) + sum(beta) >= 1")
        return self.alpha0 / (1.0 - self.persistence)

    def innovation_spec(self, family: str) -> InnovationSpec:
        return InnovationSpec(family, nu=self.nu, lam=self.lam)

    def as_dict(self) -> dict[str, float]:
        out = {"alpha0": self.alpha0}
        out.update({f"alpha{i + 1}": a for i, a in enumerate(self.alpha)})
        out.update({f"beta{j + 1}": b for j, b in enumerate(self.beta)})
        if self.nu is not None:
            out["nu"] = self.nu
        if self.lam is not None:
            out["lambda"] = self.lam
        return out


@dataclass
class GarchFit:
    spec: GarchSpec
    params: GarchParams
    std_errors: dict[str, float] | None
    loglik: float
    bic: float  # per observation: (k ln T - 2 lnL) / T
    bic_raw: float
    sigma: np.ndarray
    residuals: np.ndarray
    n_obs: int
    converged: bool
    nu_at_bound: bool = False
    scale: float = 1.0
    notes: list[str] = field(default_factory=list)

    @property
    def innovation(self) -> InnovationDistribution:
        return InnovationDistribution(self.params.innovation_spec(self.spec.innovation))


def garch_variance(y, params: GarchParams, init: str = "unconditional") -> np.ndarray:
    """Conditional variances sigma_t^2, t = 1..T.

    Pre-sample squared returns and variances are set to the unconditional variance
    (``init="unconditional"``) or to the sample variance of ``y`` (``init="sample"``).
    """
    y = np.asarray(y, dtype=float)
    p, q = len(params.alpha), len(params.beta)
    if init == "unconditional":
        s0 = params.unconditional_variance()
    elif init == "sample":
        s0 = float(np.mean(y**2))
    else:
        raise GarchError(f"unknown init {init!r}")
    if p == 0 and q == 0:
        return np.full(y.size, params.alpha0)
    y2 = y**2
    alpha = np.asarray(params.alpha, dtype=float)
    # forcing_t = alpha0 + sum_i alpha_i y_{t-i}^2 with pre-sample y^2 = s0
    padded = np.concatenate([np.full(p, s0), y2])
    forcing = np.full(y.size, params.alpha0)
    for i in range(1, p + 1):
        forcing += alpha[i - 1] * padded[p - i:p - i + y.size]
    if q == 0:
        return forcing
    a = np.concatenate([[1.0], -np.asarray(params.beta, dtype=float)])
    zi = lfiltic([1.0], a, y=np.full(q, s0))
    out, _ = lfilter([1.0], a, forcing, zi=zi)
    return out


def garch_filter(y, params: GarchParams, init: str = "unconditional") -> np.ndarray:
    """Conditional volatilities sigma_t."""
    return np.sqrt(garch_variance(y, params, init))


def garch_loglik(y, params: GarchParams, innovation: str | InnovationSpec = "gaussian",
                 init: str = "unconditional") -> float:
    """Sum over t of ``log f(y_t / sigma_t) - log sigma_t``."""
    if isinstance(innovation, str):
        innovation = params.innovation_spec(innovation)
    dist = InnovationDistribution(innovation)
    y = np.asarray(y, dtype=float)
    sig2 = garch_variance(y, params, init)
    sig = np.sqrt(sig2)
    return float(np.sum(dist.log_pdf(y / sig)) - 0.5 * np.sum(np.log(sig2)))


class _Transform:
    """Maps unconstrained vectors to GARCH parameters (on standardized data)."""

    def __init__(self, spec: GarchSpec):
        self.spec = spec
        self.n_dyn = spec.p + spec.q
        self.has_nu = spec.innovation in ("student_t", "skew_t")
        self.has_lam = spec.innovation in ("skew_gaussian", "skew_t")
        # z = [log alpha0, logit persistence, simplex logits (n_dyn - 1), nu, lam]
        self.size = 2 + max(self.n_dyn - 1, 0) + int(self.has_nu) + int(self.has_lam)

    def params(self, z) -> GarchParams:
        p, q = self.spec.p, self.spec.q
        alpha0 = float(np.exp(z[0]))
        persistence = float(expit(z[1]))
        weights = softmax(np.concatenate([[0.0], z[2:2 + self.n_dyn - 1]]))
        coef = persistence * weights
        k = 2 + self.n_dyn - 1
        nu = lam = None
        if self.has_nu:
            nu = 2.0 + (NU_MAX - 2.0) * float(expit(z[k]))
            k += 1
        if self.has_lam:
            lam = float(np.exp(z[k]))
        return GarchParams(alpha0, tuple(map(float, coef[:p])), tuple(map(float, coef[p:p + q])), nu, lam)

    def start(self, rng, var: float = 1.0) -> np.ndarray:
        z = np.empty(self.size)
        pers = 0.9 if self.spec.q > 0 else 0.3
        z[0] = np.log(var * (1.0 - pers))
        z[1] = np.log(pers / (1.0 - pers))
        dyn = self.n_dyn - 1
        if dyn > 0:
            # favour GARCH terms: alpha share ~0.08 of persistence
            w = np.array([0.08 / max(self.spec.p, 1)] * self.spec.p + [0.92 / max(self.spec.q, 1)] * self.spec.q)
            if self.spec.q == 0:
                w = np.full(self.spec.p, 1.0 / self.spec.p)
            w = w / w.sum()
            z[2:2 + dyn] = np.log(w[1:]) - np.log(w[0])
        k = 2 + dyn
        if self.has_nu:
            nu0 = 8.0
            z[k] = np.log((nu0 - 2.0) / (NU_MAX - nu0))
            k += 1
        if self.has_lam:
            z[k] = 0.0
        if rng is not None:
            z = z + rng.normal(scale=0.3, size=z.size)
        return z

    def natural(self, z) -> np.ndarray:
        pr = self.params(z)
        vals = [pr.alpha0, *pr.alpha, *pr.beta]
        if pr.nu is not None:
            vals.append(pr.nu)
        if pr.lam is not None:
            vals.append(pr.lam)
        return np.array(vals)


def _negloglik_factory(y: np.ndarray, tr: _Transform, init: str):
    family = tr.spec.innovation

    def negll(z):
        try:
            pr = tr.params(z)
            val = -garch_loglik(y, pr, family, init)
        except (GarchError, FloatingPointError, ValueError):
            return 1e12
        return val if np.isfinite(val) else 1e12

    return negll


def fit_garch(y, spec: GarchSpec, *, restarts: int = 3, seed: int = 0,
              init: str = "unconditional") -> GarchFit:
    """Maximum-likelihood fit: Nelder-Mead, then BFGS polish, from several starts.

    The series is rescaled to unit sample RMS internally; reported parameters,
    volatilities and log-likelihood refer to the original scale.
    """
    y = np.asarray(y, dtype=float)
    if y.size < 2 or np.ptp(y) == 0:
        raise GarchError("constant input")
    if y.size < 250:
        warnings.warn(f"short series (T={y.size}) for GARCH estimation", stacklevel=2)
    scale = float(np.sqrt(np.mean(y**2)))
    ys = y / scale
    tr = _Transform(spec)
    negll = _negloglik_factory(ys, tr, init)
    rng = np.random.default_rng(seed)

    best = None
    for attempt in range(restarts + 1):
        z0 = tr.start(None if attempt == 0 else rng)
        with np.errstate(all="ignore"):
            res = minimize(negll, z0, method="Nelder-Mead",
                           options={"maxiter": 400 * tr.size, "xatol": 1e-6, "fatol": 1e-8})
            res2 = minimize(negll, res.x, method="BFGS", options={"gtol": 1e-5, "maxiter": 200})
        cand = res2 if res2.fun <= res.fun else res
        if best is None or cand.fun < best.fun - 1e-9:
            best = cand
            best_ok = bool(res.success or res2.success or np.isfinite(cand.fun))
        if attempt >= 1 and best is not None and abs(cand.fun - best.fun) < 1e-4:
            break
    if best is None or best.fun >= 1e12:
        raise GarchError(f"{spec.label()}: optimizer failed to converge")

    z_hat = best.x
    pr_std = tr.params(z_hat)
    params = GarchParams(pr_std.alpha0 * scale**2, pr_std.alpha, pr_std.beta, pr_std.nu, pr_std.lam)
    loglik = -best.fun - y.size * np.log(scale)
    sigma = garch_filter(y, params, init)

    names = list(params.as_dict())
    with np.errstate(all="ignore"):
        se = delta_method_se(negll, z_hat, tr.natural)
    std_errors = None
    notes = []
    if se is None:
        notes.append("Hessian not positive definite; standard errors unavailable")
    else:
        se = se.copy()
        se[0] *= scale**2
        std_errors = dict(zip(names, map(float, se)))

    k = spec.n_params
    T = y.size
    bic_raw = k * np.log(T) - 2.0 * loglik
    nu_bound = params.nu is not None and params.nu > NU_MAX - 0.5
    if nu_bound:
        notes.append(f"nu at upper bound {NU_MAX:g}")
    return GarchFit(spec, params, std_errors, float(loglik), float(bic_raw / T), float(bic_raw),
                    sigma, y / sigma, T, best_ok, nu_bound, scale, notes)


@dataclass
class GarchSelection:
    best: GarchFit
    table: pd.DataFrame
    fits: dict[tuple[int, int, str], GarchFit]


def select_garch(y, p_grid=(1, 2), q_grid=(0, 1, 2), families=FAMILIES, *,
                 restarts: int = 3, seed: int = 0, init: str = "unconditional") -> GarchSelection:
    """Fit every (p, q, family) cell and pick the lowest BIC.

    Ties break toward fewer parameters, then family order gaussian < student_t <
    skew_gaussian < skew_t.
    """
    fits = {}
    rows = []
    for p in sorted(set(p_grid)):
        for q in sorted(set(q_grid)):
            if p + q < 1:
                continue
            for fam in sorted(set(families), key=FAMILY_ORDER.__getitem__):
                spec = GarchSpec(p, q, fam)
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        fit = fit_garch(y, spec, restarts=restarts, seed=seed, init=init)
                except GarchError as exc:
                    log.warning("%s failed: %s", spec.label(), exc)
                    continue
                fits[(p, q, fam)] = fit
                rows.append({"p": p, "q": q, "family": fam, "k": spec.n_params,
                             "loglik": fit.loglik, "bic": fit.bic, "bic_raw": fit.bic_raw})
    if not fits:
        raise GarchError("all GARCH fits failed")
    table = pd.DataFrame(rows)
    order = table.assign(_fam=table["family"].map(FAMILY_ORDER)).sort_values(
        ["bic", "k", "_fam"], kind="mergesort")
    top = order.iloc[0]
    table["selected"] = False
    table.loc[top.name, "selected"] = True
    return GarchSelection(fits[(int(top["p"]), int(top["q"]), top["family"])], table, fits)


def simulate_garch(spec: GarchSpec, params: GarchParams, T: int, seed=None, *,
                   innovations: np.ndarray | None = None, burn: int = 500) -> np.ndarray:
    """Simulate a GARCH path of length ``T``.

    ``innovations`` (standardized, length ``T``) may be supplied to couple several
    series through a copula; otherwise they are drawn from the spec's family and a
    burn-in of ``burn`` steps is discarded.
    """
    if not params.stationary:
        raise GarchError("nonstationary parameters: sum(alpha) + sum(beta) >= 1")
    rng = as_rng(seed)
    dist = InnovationDistribution(params.innovation_spec(spec.innovation))
    if innovations is None:
        eps = dist.sample(rng, size=T + burn)
    else:
        eps = np.asarray(innovations, dtype=float)
        if eps.size != T:
            raise GarchError("innovations must have length T")
        burn = 0
    p, q = len(params.alpha), len(params.beta)
    s0 = params.unconditional_variance()
    y2_hist = np.full(p, s0)
    s2_hist = np.full(q, s0)
    out = np.empty(eps.size)
    alpha = np.asarray(params.alpha)
    beta = np.asarray(params.beta)
    for t in range(eps.size):
        s2 = params.alpha0 + alpha @ y2_hist + beta @ s2_hist
        yt = np.sqrt(s2) * eps[t]
        out[t] = yt
        if p:
            y2_hist = np.roll(y2_hist, 1)
            y2_hist[0] = yt * yt
        if q:
            s2_hist = np.roll(s2_hist, 1)
            s2_hist[0] = s2
    return out[burn:]
