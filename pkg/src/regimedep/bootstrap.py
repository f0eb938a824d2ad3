"""Moving-block and iid bootstrap standard errors."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

SCHEMES = ("iid", "moving_block")
MIN_REPLICATES = 50
MAX_FAILURE_RATE = 0.2


class BootstrapError(ValueError):
    pass


def default_block_length(T: int) -> int:
    return max(1, math.ceil(T ** (1.0 / 3.0)))


@dataclass(frozen=True)
class BootstrapPlan:
    """``block_length=None`` means ``ceil(T^(1/3))`` for the moving-block scheme."""

    scheme: str = "moving_block"
    block_length: int | None = None
    replicates: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise BootstrapError(f"unknown scheme {self.scheme!r}")
        if self.replicates < MIN_REPLICATES:
            raise BootstrapError(f"need at least {MIN_REPLICATES} replicates")
        if self.block_length is not None and self.block_length < 1:
            raise BootstrapError("block_length must be positive")

    def block_for(self, T: int) -> int:
        return self.block_length if self.block_length is not None else default_block_length(T)

    def check(self, T: int) -> None:
        """Plan validity for a statistic: block length at most T/2."""
        if self.scheme == "moving_block" and self.block_for(T) > T / 2:
            raise BootstrapError(f"block length {self.block_for(T)} exceeds T/2 = {T / 2:g}")


def resample_indices(T: int, plan: BootstrapPlan, rng=None) -> np.ndarray:
    """One bootstrap index vector of length ``T``.

    Moving blocks are drawn from the ``T - L + 1`` windows and concatenated,
    then truncated to ``T``.  Block length ``T`` yields the identity window.
    """
    if T < 1:
        raise BootstrapError("T must be positive")
    rng = np.random.default_rng(plan.seed) if rng is None else rng
    if plan.scheme == "iid":
        return rng.integers(0, T, size=T)
    L = plan.block_for(T)
    if L > T:
        raise BootstrapError(f"block length {L} exceeds T = {T}")
    n_blocks = -(-T // L)
    starts = rng.integers(0, T - L + 1, size=n_blocks)
    return (starts[:, None] + np.arange(L)[None, :]).ravel()[:T]


@dataclass
class BootstrapResult:
    estimate: object
    se: object
    replicates: np.ndarray  # B x k, NaN rows for failed replicates
    n_failed: int
    errors: list[str] = field(default_factory=list)

    @property
    def n_ok(self) -> int:
        return int(self.replicates.shape[0] - self.n_failed)


def _is_sample(data) -> bool:
    return not isinstance(data, (np.ndarray, list, tuple)) and hasattr(data, "take")


def _take(data, idx):
    return data.take(idx) if _is_sample(data) else np.asarray(data)[idx]


def _length(data) -> int:
    return int(data.T) if _is_sample(data) else len(data)


def bootstrap_se(statistic, data, plan: BootstrapPlan) -> BootstrapResult:
    """Point estimate, SE (replicate standard deviation) and replicate values.

    ``statistic`` maps data (array rows or an object with ``take``/``T``) to a
    scalar or vector.  Replicate ``b`` draws indices with a generator spawned
    from the plan seed, so results do not depend on evaluation order.  Failed
    replicates are dropped; more than 20% failures raise.
    """
    T = _length(data)
    plan.check(T)
    raw = np.asarray(statistic(data), dtype=float)
    scalar = raw.ndim == 0
    est = np.atleast_1d(raw)
    reps = np.full((plan.replicates, est.size), np.nan)
    errors = []
    for b, child in enumerate(np.random.SeedSequence(plan.seed).spawn(plan.replicates)):
        idx = resample_indices(T, plan, np.random.default_rng(child))
        try:
            val = np.atleast_1d(np.asarray(statistic(_take(data, idx)), dtype=float))
            if val.shape != est.shape or not np.all(np.isfinite(val)):
                raise ValueError("non-finite or misshapen replicate")
            reps[b] = val
        except Exception as exc:  # replicate failures are recorded, not fatal
            errors.append(f"replicate {b}: {exc}")
    n_failed = len(errors)
    if n_failed > MAX_FAILURE_RATE * plan.replicates:
        raise BootstrapError(f"{n_failed} of {plan.replicates} replicates failed")
    if n_failed:
        log.info("bootstrap: %d of %d replicates failed", n_failed, plan.replicates)
    ok = reps[~np.isnan(reps).any(axis=1)]
    se = np.std(ok, axis=0, ddof=1)
    if scalar:
        return BootstrapResult(float(est[0]), float(se[0]), reps, n_failed, errors)
    return BootstrapResult(est, se, reps, n_failed, errors)
