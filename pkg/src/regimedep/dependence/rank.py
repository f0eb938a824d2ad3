"""Sample rank correlations: Kendall's tau-b and Spearman's rho."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata


class RankError(ValueError):
    pass


def _pairs(counts: np.ndarray) -> int:
    counts = counts.astype(np.int64)
    return int(np.sum(counts * (counts - 1) // 2))


def _tie_pairs(a: np.ndarray) -> int:
    """Number of pairs tied in ``a`` (``a`` sorted)."""
    if a.size == 0:
        return 0
    edges = np.flatnonzero(np.diff(a)) + 1
    runs = np.diff(np.concatenate([[0], edges, [a.size]]))
    return _pairs(runs)


def _joint_tie_pairs(x: np.ndarray, y: np.ndarray) -> int:
    """Pairs tied in both coordinates (``x`` then ``y`` lexicographically sorted)."""
    if x.size == 0:
        return 0
    change = (np.diff(x) != 0) | (np.diff(y) != 0)
    edges = np.flatnonzero(change) + 1
    runs = np.diff(np.concatenate([[0], edges, [x.size]]))
    return _pairs(runs)


def count_inversions(a: np.ndarray) -> tuple[int, np.ndarray]:
    """Strict inversions ``#{i < j : a[i] > a[j]}`` by bottom-up merge sort.

    ``a`` holds integers.  Each level merges adjacent sorted runs;
    for every element of a right run the number of strictly larger elements in
    its left partner is found by binary search on block-offset keys.  Returns
    the count and the sorted array.
    """
    a = np.asarray(a, dtype=np.int64).copy()
    n = a.size
    if n < 2:
        return 0, a
    lo = int(a.min())
    a -= lo  # block-offset keys need non-negative values
    M = int(a.max()) + 1
    idx = np.arange(n)
    total = 0
    width = 1
    while width < n:
        block = idx // (2 * width)
        left = (idx % (2 * width)) < width
        keys = block * M + a
        kl = keys[left]  # sorted: runs are sorted and blocks increase
        kr = keys[~left]
        br = block[~left]
        # left elements of the same block that are <= each right element
        le = np.searchsorted(kl, kr, side="right") - np.searchsorted(kl, br * M, side="left")
        nleft = np.searchsorted(kl, (br + 1) * M, side="left") - np.searchsorted(kl, br * M, side="left")
        total += int(np.sum(nleft - le))
        # merge: a stable sort on integer keys joins each pair of runs
        a = np.sort(keys, kind="stable") - np.repeat(np.arange(block[-1] + 1), np.bincount(block)) * M
        width *= 2
    return total, a + lo


def _tau_b(n0: int, n1: int, n2: int, n3: int, discordant: int) -> float:
    """tau-b from pair counts: n0 all pairs, n1 x-ties, n2 y-ties, n3 joint ties."""
    den = (n0 - n1) * (n0 - n2)
    if den <= 0:
        raise RankError("tau-b undefined for constant input")
    concordant = n0 - n1 - n2 + n3 - discordant
    return (concordant - discordant) / np.sqrt(float(den))


def _prepare(x, y, n_min: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise RankError("inputs must have equal length")
    if x.size < n_min:
        raise RankError(f"need at least {n_min} observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise RankError("inputs must be finite")
    return x, y


def sample_kendall_tau(x, y) -> float:
    """Kendall's tau-b in O(n log n) (Knight's algorithm)."""
    x, y = _prepare(x, y, 2)
    n = x.size
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    n0 = n * (n - 1) // 2
    n1 = _tie_pairs(xs)
    n3 = _joint_tie_pairs(xs, ys)
    ranks = np.unique(ys, return_inverse=True)[1]
    # within x-ties y is ascending, so tied-x pairs contribute no inversions
    discordant, ys_sorted = count_inversions(ranks)
    n2 = _tie_pairs(ys_sorted)
    return _tau_b(n0, n1, n2, n3, discordant)


def kendall_tau_bruteforce(x, y) -> float:
    """O(n^2) reference implementation of tau-b."""
    x, y = _prepare(x, y, 2)
    n = x.size
    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    iu = np.triu_indices(n, 1)
    sx, sy = dx[iu], dy[iu]
    prod = sx * sy
    n0 = n * (n - 1) // 2
    n1 = int(np.sum(sx == 0))
    n2 = int(np.sum(sy == 0))
    n3 = int(np.sum((sx == 0) & (sy == 0)))
    discordant = int(np.sum(prod < 0))
    return _tau_b(n0, n1, n2, n3, discordant)


def sample_spearman_rho(x, y) -> float:
    """Pearson correlation of average ranks."""
    x, y = _prepare(x, y, 3)
    rx = rankdata(x)
    ry = rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    den = np.sqrt(np.sum(rx * rx) * np.sum(ry * ry))
    if den == 0:
        raise RankError("Spearman rho undefined for constant input")
    return float(np.sum(rx * ry) / den)
