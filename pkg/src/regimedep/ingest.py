"""Price/announcement loading, return alignment and regime changepoint detection."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats

log = logging.getLogger(__name__)


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class PriceSeries:
    asset_id: str
    dates: np.ndarray  # datetime64[D]
    prices: np.ndarray

    def __post_init__(self):
        if len(self.dates) != len(self.prices):
            raise IngestError(f"{self.asset_id}: dates and prices differ in length")
        if len(self.dates) > 1 and np.any(np.diff(self.dates).astype(int) <= 0):
            raise IngestError(f"{self.asset_id}: dates must be strictly increasing")
        if np.any(~(np.asarray(self.prices) > 0)):
            raise IngestError(f"{self.asset_id}: nonpositive price encountered")


@dataclass(frozen=True)
class ReturnPanel:
    asset_ids: tuple[str, ...]
    dates: np.ndarray  # datetime64[D], date of the later price in each return
    returns: np.ndarray  # T x d

    def __post_init__(self):
        r = np.asarray(self.returns, dtype=float)
        if r.ndim != 2 or r.shape[1] != len(self.asset_ids):
            raise IngestError("returns must be T x d with one column per asset")
        if r.shape[0] != len(self.dates):
            raise IngestError("returns and dates differ in length")
        if len(self.asset_ids) < 2:
            raise IngestError("a panel needs at least two assets")
        if not np.all(np.isfinite(r)):
            raise IngestError("panel contains missing or non-finite cells")

    @property
    def T(self) -> int:
        return self.returns.shape[0]

    @property
    def d(self) -> int:
        return self.returns.shape[1]

    def column(self, asset: str) -> np.ndarray:
        return self.returns[:, self.asset_ids.index(asset)]

    def subset_rows(self, mask) -> "ReturnPanel":
        return ReturnPanel(self.asset_ids, self.dates[mask], self.returns[mask])

    def check_variance(self):
        sd = self.returns.std(axis=0)
        bad = [a for a, s in zip(self.asset_ids, sd) if not s > 0]
        if bad:
            raise IngestError(f"zero-variance return columns: {bad}")


@dataclass(frozen=True)
class AnnouncementSeries:
    dates: np.ndarray
    indicator: np.ndarray

    def __post_init__(self):
        if len(self.dates) != len(self.indicator):
            raise IngestError("announcement dates and indicator differ in length")
        if not np.all(np.isin(self.indicator, (0, 1))):
            raise IngestError("announcement indicator must be 0/1")


@dataclass(frozen=True)
class PeriodSplit:
    change_date: np.datetime64
    period1_range: tuple[np.datetime64, np.datetime64]
    period2_range: tuple[np.datetime64, np.datetime64]


@dataclass
class ChangepointResult:
    """Outcome of the rolling two-sample test over quarter boundaries."""

    table: pd.DataFrame  # boundary_date, t_stat, p_value
    boundary_index: int | None
    change_date: np.datetime64 | None
    window: int
    alpha: float
    skipped: bool = False
    reason: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.change_date is not None


def _to_day(values) -> np.ndarray:
    try:
        parsed = pd.to_datetime(pd.Series(values), format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise IngestError(f"dates must be ISO-8601: {exc}") from exc
    return parsed.to_numpy().astype("datetime64[D]")


def load_price_table(path, layout: str = "wide") -> list[PriceSeries]:
    """Read a CSV of prices in wide (``date,<asset>...``) or long (``date,asset,price``) layout."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"missing file: {path}")
    frame = pd.read_csv(path, dtype=str)
    if "date" not in frame.columns:
        raise IngestError("price table needs a 'date' column")
    if layout == "wide":
        frame = frame.melt(id_vars="date", var_name="asset", value_name="price")
    elif layout == "long":
        missing = {"asset", "price"} - set(frame.columns)
        if missing:
            raise IngestError(f"long layout needs columns date,asset,price; missing {sorted(missing)}")
    else:
        raise IngestError(f"unknown layout {layout!r}")

    frame["price"] = pd.to_numeric(frame["price"], errors="coerce")
    bad = frame["price"].isna() | ~np.isfinite(frame["price"])
    if bad.any():
        log.info("dropped %d rows with unparseable price", int(bad.sum()))
    frame = frame.loc[~bad].copy()
    if frame.empty:
        raise IngestError("no parseable rows")
    frame["date"] = _to_day(frame["date"])
    dup = frame.duplicated(subset=["date", "asset"])
    if dup.any():
        first = frame.loc[dup].iloc[0]
        raise IngestError(f"duplicate key ({first['date']}, {first['asset']})")

    out = []
    for asset in pd.unique(frame["asset"]):
        sub = frame.loc[frame["asset"] == asset].sort_values("date")
        out.append(PriceSeries(str(asset), sub["date"].to_numpy(), sub["price"].to_numpy(float)))
    return out


def load_announcements(path) -> AnnouncementSeries:
    path = Path(path)
    if not path.exists():
        raise IngestError(f"missing file: {path}")
    frame = pd.read_csv(path)
    if not {"date", "indicator"} <= set(frame.columns):
        raise IngestError("announcement table needs columns date,indicator")
    frame["date"] = _to_day(frame["date"])
    frame = frame.sort_values("date")
    return AnnouncementSeries(frame["date"].to_numpy(), frame["indicator"].to_numpy(int))


def align_and_log_returns(series: list[PriceSeries]) -> ReturnPanel:
    """Restrict to common dates and take log-returns ``ln(p[t+1] / p[t])``."""
    if len(series) < 2:
        raise IngestError("need at least two price series")
    common = series[0].dates
    for s in series[1:]:
        common = np.intersect1d(common, s.dates)
    if common.size == 0:
        raise IngestError("empty intersection of dates")
    if common.size < 3:
        raise IngestError("fewer than 3 common dates")
    cols = []
    for s in series:
        idx = np.searchsorted(s.dates, common)
        p = np.asarray(s.prices, dtype=float)[idx]
        if np.any(p <= 0):
            raise IngestError(f"{s.asset_id}: nonpositive price")
        cols.append(np.diff(np.log(p)))
    return ReturnPanel(tuple(s.asset_id for s in series), common[1:], np.column_stack(cols))


def quarter_label(period: pd.Period) -> str:
    return f"{period.year}Q{period.quarter}"


def quarterly_counts(a: AnnouncementSeries) -> list[tuple[str, int]]:
    """Announcement counts per calendar quarter, zero-count quarters included."""
    if len(a.dates) == 0:
        raise IngestError("empty announcement series")
    q = pd.PeriodIndex(pd.to_datetime(a.dates), freq="Q")
    full = pd.period_range(q.min(), q.max(), freq="Q")
    counts = pd.Series(np.asarray(a.indicator, dtype=int), index=q).groupby(level=0).sum()
    counts = counts.reindex(full, fill_value=0)
    return [(quarter_label(p), int(c)) for p, c in counts.items()]


def _welch(before: np.ndarray, after: np.ndarray) -> tuple[float, float]:
    v1, v2 = before.var(ddof=1), after.var(ddof=1)
    if v1 == 0 and v2 == 0:
        if before.mean() == after.mean():
            return 0.0, 1.0
        return float(np.sign(before.mean() - after.mean()) * np.inf), 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # one constant window is fine here
        res = stats.ttest_ind(before, after, equal_var=False)
    return float(res.statistic), float(res.pvalue)


def quarter_start(label: str) -> np.datetime64:
    return np.datetime64(pd.Period(label, freq="Q").start_time.date(), "D")


def detect_changepoint(counts, window: int = 4, alpha: float = 0.05) -> ChangepointResult:
    """Welch two-sample t-test of ``window`` quarters before vs after each interior boundary.

    ``counts`` is a sequence of ``(quarter label, count)`` pairs.  The boundary with the
    smallest p-value below ``alpha`` is returned; boundary ``b`` means the change happens at
    the start of quarter ``b`` (0-based), i.e. period 2 begins with ``counts[b]``.
    """
    if window < 2:
        raise IngestError("window must be >= 2")
    if not 0 < alpha < 1:
        raise IngestError("alpha must be in (0, 1)")
    labels = [c[0] for c in counts]
    values = np.array([c[1] for c in counts], dtype=float)
    if len(values) < 2 * window:
        raise IngestError(f"need at least {2 * window} quarters, got {len(values)}")

    rows = []
    for b in range(window, len(values) - window + 1):
        t_stat, p = _welch(values[b - window:b], values[b:b + window])
        rows.append((b, labels[b], quarter_start(labels[b]), t_stat, p))
    table = pd.DataFrame(rows, columns=["boundary", "quarter", "boundary_date", "t_stat", "p_value"])

    significant = table.loc[table["p_value"] < alpha]
    if significant.empty:
        return ChangepointResult(table, None, None, window, alpha, reason="no changepoint")
    best = significant.loc[significant["p_value"].idxmin()]
    change = np.datetime64(pd.Timestamp(best["boundary_date"]).date(), "D")
    return ChangepointResult(table, int(best["boundary"]), change, window, alpha)


def make_split(panel: ReturnPanel, change_date) -> PeriodSplit:
    change = np.datetime64(change_date, "D")
    first, last = panel.dates[0], panel.dates[-1]
    if not (first < change <= last):
        raise IngestError(f"change date {change} outside panel range ({first}, {last}]")
    return PeriodSplit(change, (first, change), (change, last + np.timedelta64(1, "D")))


def split_panel(panel: ReturnPanel, split: PeriodSplit) -> tuple[ReturnPanel, ReturnPanel]:
    """Partition rows into ``date < change_date`` and ``date >= change_date``."""
    change = np.datetime64(split.change_date, "D")
    if not (panel.dates[0] < change <= panel.dates[-1]):
        raise IngestError(f"change date {change} outside panel range")
    mask = panel.dates < change
    return panel.subset_rows(mask), panel.subset_rows(~mask)
