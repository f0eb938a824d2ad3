"""Copula parameter containers and validation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FAMILIES = ("gaussian", "student_t", "skew_t", "clayton", "gumbel", "frank")
ELLIPTICAL = ("gaussian", "student_t")
ARCHIMEDEAN = ("clayton", "gumbel", "frank")

CLAMP = 1e-10
NU_MAX = 100.0


class CopulaError(ValueError):
    pass


def _as_corr(corr, dim: int | None = None) -> np.ndarray:
    r = np.asarray(corr, dtype=float)
    if r.ndim == 0:
        r = np.array([[1.0, float(r)], [float(r), 1.0]])
    if dim is not None and r.shape != (dim, dim):
        raise CopulaError(f"correlation matrix must be {dim}x{dim}")
    return r


@dataclass(frozen=True, eq=False)
class CopulaParams:
    """Parameters of one copula member.

    ``corr`` is used by the elliptical and skew-t families, ``nu`` by the t
    families, ``delta`` (length ``dim``) by skew-t, ``theta`` by the Archimedean
    families.
    """

    family: str
    dim: int = 2
    corr: np.ndarray | None = None
    nu: float | None = None
    delta: np.ndarray | None = None
    theta: float | None = None

    def __post_init__(self):
        validate(self)

    # convenience constructors -------------------------------------------------
    @classmethod
    def gaussian(cls, corr) -> "CopulaParams":
        r = _as_corr(corr)
        return cls("gaussian", r.shape[0], corr=r)

    @classmethod
    def student_t(cls, corr, nu: float) -> "CopulaParams":
        r = _as_corr(corr)
        return cls("student_t", r.shape[0], corr=r, nu=float(nu))

    @classmethod
    def skew_t(cls, corr, nu: float, delta) -> "CopulaParams":
        r = _as_corr(corr)
        return cls("skew_t", r.shape[0], corr=r, nu=float(nu), delta=np.asarray(delta, dtype=float))

    @classmethod
    def archimedean(cls, family: str, theta: float, dim: int = 2) -> "CopulaParams":
        return cls(family, dim, theta=float(theta))

    # --------------------------------------------------------------------------
    @property
    def rho(self) -> float:
        if self.corr is None or self.dim != 2:
            raise CopulaError("rho is defined for bivariate elliptical/skew-t members only")
        return float(self.corr[0, 1])

    @property
    def n_free(self) -> int:
        """Number of free parameters (for BIC)."""
        if self.family in ARCHIMEDEAN:
            return 1
        k = self.dim * (self.dim - 1) // 2
        if self.family == "student_t":
            k += 1
        elif self.family == "skew_t":
            k += 1 + self.dim
        return k

    @property
    def alpha(self) -> np.ndarray:
        """Azzalini shape vector equivalent to ``delta`` (skew-t only)."""
        r_inv_delta = np.linalg.solve(self.corr, self.delta)
        q = float(self.delta @ r_inv_delta)
        return r_inv_delta / np.sqrt(1.0 - q)

    def named_values(self) -> dict[str, float]:
        out = {}
        if self.corr is not None:
            for i in range(self.dim):
                for j in range(i + 1, self.dim):
                    out[f"rho_{i + 1}{j + 1}"] = float(self.corr[i, j])
        if self.nu is not None:
            out["nu"] = float(self.nu)
        if self.delta is not None:
            for i, dl in enumerate(self.delta):
                out[f"delta_{i + 1}"] = float(dl)
        if self.theta is not None:
            out["theta"] = float(self.theta)
        return out

    def __repr__(self):
        vals = ", ".join(f"{k}={v:.6g}" for k, v in self.named_values().items())
        return f"CopulaParams({self.family}, d={self.dim}, {vals})"


def validate(p: CopulaParams) -> None:
    if p.family not in FAMILIES:
        raise CopulaError(f"unknown copula family {p.family!r}")
    if p.dim < 2:
        raise CopulaError("dimension must be >= 2")
    if p.family in ("gaussian", "student_t", "skew_t"):
        if p.corr is None:
            raise CopulaError(f"{p.family} needs a correlation matrix")
        r = np.asarray(p.corr)
        if r.shape != (p.dim, p.dim):
            raise CopulaError("correlation matrix has wrong shape")
        if not np.allclose(r, r.T, atol=1e-12) or not np.allclose(np.diag(r), 1.0, atol=1e-12):
            raise CopulaError("correlation matrix must be symmetric with unit diagonal")
        if np.any(np.abs(r) > 1):
            raise CopulaError("correlations must lie in [-1, 1]")
        try:
            np.linalg.cholesky(r)
        except np.linalg.LinAlgError as exc:
            raise CopulaError("correlation matrix must be positive definite") from exc
    if p.family in ("student_t", "skew_t"):
        if p.nu is None or not p.nu > 2:
            raise CopulaError("nu must be > 2")
    if p.family == "skew_t":
        if p.delta is None or np.shape(p.delta) != (p.dim,):
            raise CopulaError("skew-t needs a delta vector of length dim")
        q = float(p.delta @ np.linalg.solve(p.corr, p.delta))
        if not q < 1:
            raise CopulaError("skewness vector violates delta' R^-1 delta < 1")
    if p.family in ARCHIMEDEAN:
        th = p.theta
        if th is None or not np.isfinite(th):
            raise CopulaError("theta must be finite")
        if p.family == "clayton":
            ok = th > 0 if p.dim > 2 else (th >= -1 and th != 0)
        elif p.family == "gumbel":
            ok = th >= 1
        else:
            ok = th > 0 if p.dim > 2 else th != 0
        if not ok:
            raise CopulaError(f"theta={th} outside the valid range for {p.family} (d={p.dim})")


def clamp_u(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.clip(u, CLAMP, 1.0 - CLAMP)


def check_interior(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise CopulaError("copula arguments must lie strictly inside (0, 1)")
    return u


def partial_to_corr(partials: np.ndarray, dim: int) -> np.ndarray:
    """Correlation matrix from C-vine partial correlations (always positive definite)."""
    partials = np.asarray(partials, dtype=float)
    P = np.zeros((dim, dim))
    k = 0
    for i in range(dim):
        for j in range(i + 1, dim):
            P[i, j] = partials[k]
            k += 1
    R = np.eye(dim)
    for i in range(dim - 1):
        for j in range(i + 1, dim):
            r = P[i, j]
            for m in range(i - 1, -1, -1):
                r = r * np.sqrt((1 - P[m, i] ** 2) * (1 - P[m, j] ** 2)) + P[m, i] * P[m, j]
            R[i, j] = R[j, i] = r
    return R


def corr_to_partial(R: np.ndarray) -> np.ndarray:
    """Inverse of :func:`partial_to_corr` for a positive definite ``R``."""
    R = np.asarray(R, dtype=float)
    d = R.shape[0]
    P = np.zeros((d, d))
    for i in range(d - 1):
        for j in range(i + 1, d):
            if i == 0:
                P[i, j] = R[i, j]
                continue
            # partial correlation of (i, j) given variables 0..i-1
            idx = list(range(i))
            a = R[np.ix_([i, j], idx)]
            cond = R[np.ix_([i, j], [i, j])] - a @ np.linalg.solve(R[np.ix_(idx, idx)], a.T)
            P[i, j] = cond[0, 1] / np.sqrt(cond[0, 0] * cond[1, 1])
    return np.array([P[i, j] for i in range(d) for j in range(i + 1, d)])


def nearest_corr(R: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Project a symmetric matrix to a nearby positive definite correlation matrix."""
    R = 0.5 * (np.asarray(R, dtype=float) + np.asarray(R, dtype=float).T)
    w, v = np.linalg.eigh(R)
    w = np.maximum(w, eps)
    R = (v * w) @ v.T
    s = np.sqrt(np.diag(R))
    R = R / np.outer(s, s)
    np.fill_diagonal(R, 1.0)
    return R
