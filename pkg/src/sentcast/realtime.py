"""Release-dated macro vintages and point-in-time design matrices.

A VintageStore holds every release (variable, reference period, release
date, value) and answers "what was known on day X".  Design matrices are
built so that every regressor cell is backed by a release published on
or before the forecast origin; cells with no such release are masked.
High- and low-frequency predictors enter as separate lagged columns
anchored to the target reference period.
"""

from __future__ import annotations

import bisect
import datetime as dt
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .indicators import SentimentSeries

DIFF_VARIABLES = frozenset({"PAYEMS"})


class VintageError(ValueError):
    """Raised for inconsistent release data or unusable designs."""


@dataclass(frozen=True)
class Release:
    variable: str
    ref_period_end: dt.date
    frequency: str  # "quarter" | "month" | "week"
    release_date: dt.date
    value: float


class VintageStore:
    """Releases indexed by (variable, reference period), vintage-ordered."""

    def __init__(self, releases: Iterable[Release] = ()) -> None:
        self._by_key: dict[tuple[str, dt.date], list[Release]] = {}
        self._periods: dict[str, list[dt.date]] = {}
        self._frequency: dict[str, str] = {}
        for r in releases:
            self.add(r)

    def add(self, release: Release) -> None:
        key = (release.variable, release.ref_period_end)
        vintages = self._by_key.setdefault(key, [])
        if vintages and release.release_date <= vintages[-1].release_date:
            raise VintageError(
                f"release dates must strictly increase for {key}: "
                f"{release.release_date} after {vintages[-1].release_date}"
            )
        vintages.append(release)
        periods = self._periods.setdefault(release.variable, [])
        pos = bisect.bisect_left(periods, release.ref_period_end)
        if pos == len(periods) or periods[pos] != release.ref_period_end:
            periods.insert(pos, release.ref_period_end)
        self._frequency.setdefault(release.variable, release.frequency)

    def variables(self) -> list[str]:
        return sorted(self._periods)

    def frequency(self, variable: str) -> str:
        return self._frequency[variable]

    def periods(self, variable: str) -> list[dt.date]:
        """Reference period ends known for `variable`, ascending."""
        return list(self._periods.get(variable, []))

    def vintages(self, variable: str, period_end: dt.date) -> list[Release]:
        return list(self._by_key.get((variable, period_end), []))

    def release_number(
        self, variable: str, period_end: dt.date, k: int
    ) -> Release | None:
        """The k-th (1-based) release of a reference period, if published."""
        vintages = self._by_key.get((variable, period_end), [])
        return vintages[k - 1] if 1 <= k <= len(vintages) else None

    def latest_at(
        self, variable: str, period_end: dt.date, as_of: dt.date
    ) -> Release | None:
        """Most recent vintage with release_date <= as_of, else None."""
        best = None
        for r in self._by_key.get((variable, period_end), []):
            if r.release_date <= as_of:
                best = r
            else:
                break
        return best

    def information_set(
        self, as_of: dt.date
    ) -> dict[tuple[str, dt.date], Release]:
        """Latest available release per (variable, reference period)."""
        out = {}
        for (variable, period_end) in self._by_key:
            r = self.latest_at(variable, period_end, as_of)
            if r is not None:
                out[(variable, period_end)] = r
        return out


def load_vintages(path: str) -> VintageStore:
    """Read `variable,ref_period_end,frequency,release_date,value` CSV."""
    store = VintageStore()
    with open(path, "r", encoding="utf-8") as fh:
        header = None
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise VintageError(f"line {lineno}: expected 5 columns")
            try:
                store.add(
                    Release(
                        variable=parts[0],
                        ref_period_end=dt.date.fromisoformat(parts[1]),
                        frequency=parts[2],
                        release_date=dt.date.fromisoformat(parts[3]),
                        value=float(parts[4]),
                    )
                )
            except ValueError as exc:
                raise VintageError(f"line {lineno}: {exc}") from None
    return store


def save_vintages(store: VintageStore, path: str,
                  header_comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("variable,ref_period_end,frequency,release_date,value\n")
        for variable in store.variables():
            for period_end in store.periods(variable):
                for r in store.vintages(variable, period_end):
                    fh.write(
                        f"{r.variable},{r.ref_period_end.isoformat()},"
                        f"{r.frequency},{r.release_date.isoformat()},"
                        f"{float(r.value)!r}\n"
                    )


def transform(variable: str, values: Sequence[float]) -> np.ndarray:
    """Stationarity transform: first difference for PAYEMS, percentage
    growth otherwise.  Output is one observation shorter than the input."""
    x = np.asarray(values, dtype=float)
    if len(x) < 2:
        raise VintageError("transform needs at least 2 observations")
    if variable in DIFF_VARIABLES:
        return np.diff(x)
    if np.any(x[:-1] == 0.0):
        raise VintageError(f"zero level in {variable}: growth rate undefined")
    return 100.0 * (x[1:] / x[:-1] - 1.0)


def inverse_transform(
    variable: str, first_level: float, transformed: Sequence[float]
) -> np.ndarray:
    """Rebuild levels from `first_level` and the transformed series."""
    z = np.asarray(transformed, dtype=float)
    out = np.empty(len(z) + 1)
    out[0] = first_level
    if variable in DIFF_VARIABLES:
        out[1:] = first_level + np.cumsum(z)
    else:
        out[1:] = first_level * np.cumprod(1.0 + z / 100.0)
    return out


def transform_pair(variable: str, prev: float, cur: float) -> float:
    if variable in DIFF_VARIABLES:
        return cur - prev
    if prev == 0.0:
        raise VintageError(f"zero level in {variable}: growth rate undefined")
    return 100.0 * (cur / prev - 1.0)


def assign_release_date(
    variable: str,
    ref_period_end: dt.date,
    store: VintageStore | None = None,
    default_lag_days: int = 14,
) -> dt.date:
    """Release date for a reference period, from the store when known.

    Synthetic fallback: CFNAI is stamped on the 23rd of the month after
    the reference month; anything else gets a fixed lag in days.
    """
    if store is not None:
        vintages = store.vintages(variable, ref_period_end)
        if vintages:
            return vintages[0].release_date
    if variable == "CFNAI":
        year = ref_period_end.year + (1 if ref_period_end.month == 12 else 0)
        month = 1 if ref_period_end.month == 12 else ref_period_end.month + 1
        return dt.date(year, month, 23)
    return ref_period_end + dt.timedelta(days=default_lag_days)


@dataclass
class DesignMatrix:
    """One row per target reference period, point-in-time regressors.

    mask[i, j] is True when column j was not yet published at row i's
    forecast origin; source_dates carries the backing release date of
    every unmasked cell (None for the intercept and constants).
    """

    target: str
    horizon_days: int
    columns: list[str]
    X: np.ndarray
    mask: np.ndarray
    y: np.ndarray
    periods: list[dt.date]
    origins: list[dt.date]
    release_dates: list[dt.date]
    y_release_dates: list[dt.date]  # when the outcome used became public
    source_dates: np.ndarray  # object array, dt.date or None

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    def usable_columns(self) -> list[int]:
        """Columns with no masked cell in any row."""
        return [j for j in range(self.X.shape[1]) if not self.mask[:, j].any()]

    def estimation_arrays(self) -> tuple[np.ndarray, np.ndarray, list[str]]:
        """(X, y, names) with every masked-anywhere column dropped."""
        keep = self.usable_columns()
        if not keep:
            raise VintageError("no usable columns at this horizon")
        return self.X[:, keep], self.y.copy(), [self.columns[j] for j in keep]

    def audit_no_peeking(self) -> list[tuple[int, int]]:
        """(row, column) cells whose source release postdates the origin."""
        bad = []
        n, p = self.X.shape
        for i in range(n):
            for j in range(p):
                if self.mask[i, j]:
                    continue
                src = self.source_dates[i, j]
                if src is not None and src > self.origins[i]:
                    bad.append((i, j))
        return bad


def target_outcome(
    store: VintageStore,
    variable: str,
    period_end: dt.date,
    release_number: int = 2,
) -> tuple[float, dt.date] | None:
    """Transformed outcome for a period, scored against the k-th release.

    Falls back to the latest published vintage when fewer than k
    releases exist.  The previous period's level is taken from the same
    snapshot date.  Returns (value, snapshot date) or None.
    """
    periods = store.periods(variable)
    pos = periods.index(period_end)
    if pos == 0:
        return None
    release = store.release_number(variable, period_end, release_number)
    if release is None:
        vintages = store.vintages(variable, period_end)
        if not vintages:
            return None
        release = vintages[-1]
    prev = store.latest_at(variable, periods[pos - 1], release.release_date)
    if prev is None:
        return None
    return transform_pair(variable, prev.value, release.value), release.release_date


def _lagged_period(
    periods: Sequence[dt.date], anchor_pos: int, lag: int
) -> dt.date | None:
    pos = anchor_pos - lag
    return periods[pos] if pos >= 0 else None


def build_design(
    store: VintageStore,
    sentiment: SentimentSeries | None,
    target: str,
    horizon_days: int,
    p_lags: int = 4,
    q_lags: int = 3,
    w_lags: int = 4,
    ads_lags: int = 8,
    target_release: int = 2,
    monthly_factor: str = "CFNAI",
    weekly_factors: tuple[str, ...] = ("NFCI", "ADS"),
    sentiment_name: str = "S",
) -> DesignMatrix:
    """Design matrix for `target` at a fixed horizon in days.

    Each row corresponds to one target reference period t with first
    release day d; regressors are evaluated with the information set of
    the origin d - horizon_days.  Columns: intercept, transformed target
    lags 1..P, monthly factor lags 0..Q, weekly factor lags (1..W for
    the first, 0..ads_lags for the second), and the sentiment value on
    the origin day.
    """
    target_periods = store.periods(target)
    if len(target_periods) < p_lags + 2:
        raise VintageError(f"not enough {target} history for {p_lags} lags")

    columns: list[str] = ["const"]
    columns += [f"{target}_lag{j}" for j in range(1, p_lags + 1)]
    factor_cols: list[tuple[str, str, int]] = []  # (column, variable, lag)
    if monthly_factor in store.variables():
        for j in range(0, q_lags + 1):
            columns.append(f"{monthly_factor}_lag{j}")
            factor_cols.append((f"{monthly_factor}_lag{j}", monthly_factor, j))
    weekly_specs = []
    if weekly_factors:
        if len(weekly_factors) > 0 and weekly_factors[0] in store.variables():
            weekly_specs.append((weekly_factors[0], range(1, w_lags + 1)))
        if len(weekly_factors) > 1 and weekly_factors[1] in store.variables():
            weekly_specs.append((weekly_factors[1], range(0, ads_lags + 1)))
    for variable, lags in weekly_specs:
        for j in lags:
            columns.append(f"{variable}_lag{j}")
            factor_cols.append((f"{variable}_lag{j}", variable, j))
    if sentiment is not None:
        columns.append(sentiment_name)
    col_pos = {name: j for j, name in enumerate(columns)}

    rows, masks, sources = [], [], []
    y_values, periods_used, origins = [], [], []
    release_dates, y_release_dates = [], []

    for pos, period_end in enumerate(target_periods):
        if pos <= p_lags:
            continue
        first = store.release_number(target, period_end, 1)
        if first is None:
            continue
        outcome = target_outcome(store, target, period_end, target_release)
        if outcome is None:
            continue
        origin = first.release_date - dt.timedelta(days=horizon_days)
        x = np.zeros(len(columns))
        m = np.zeros(len(columns), dtype=bool)
        src = np.full(len(columns), None, dtype=object)
        x[0] = 1.0

        # transformed lags of the target, as known at the origin
        for j in range(1, p_lags + 1):
            col = col_pos[f"{target}_lag{j}"]
            cur_p = target_periods[pos - j]
            prev_p = target_periods[pos - j - 1]
            cur = store.latest_at(target, cur_p, origin)
            prev = store.latest_at(target, prev_p, origin)
            if cur is None or prev is None:
                m[col] = True
                continue
            x[col] = transform_pair(target, prev.value, cur.value)
            src[col] = max(cur.release_date, prev.release_date)

        # factor lags anchored to the last factor period ending by period_end
        for name, variable, lag in factor_cols:
            col = col_pos[name]
            fperiods = store.periods(variable)
            anchor = bisect.bisect_right(fperiods, period_end) - 1
            ref = _lagged_period(fperiods, anchor, lag) if anchor >= 0 else None
            rel = store.latest_at(variable, ref, origin) if ref else None
            if rel is None:
                m[col] = True
            else:
                x[col] = rel.value
                src[col] = rel.release_date

        if sentiment is not None:
            col = col_pos[sentiment_name]
            value = sentiment.value_on(origin)
            if value is None:
                m[col] = True
            else:
                x[col] = value
                src[col] = origin  # news known the day it appears

        rows.append(x)
        masks.append(m)
        sources.append(src)
        y_values.append(outcome[0])
        periods_used.append(period_end)
        origins.append(origin)
        release_dates.append(first.release_date)
        y_release_dates.append(outcome[1])

    if not rows:
        raise VintageError(
            f"empty design for {target} at horizon {horizon_days}"
        )
    return DesignMatrix(
        target=target,
        horizon_days=horizon_days,
        columns=columns,
        X=np.vstack(rows),
        mask=np.vstack(masks),
        y=np.array(y_values),
        periods=periods_used,
        origins=origins,
        release_dates=release_dates,
        y_release_dates=y_release_dates,
        source_dates=np.vstack(sources),
    )


def default_horizon_grid(frequency: str) -> list[int]:
    """Weekly-spaced horizons in days back from one day before release."""
    n = 69 if frequency == "quarter" else 25
    return [1 + 7 * k for k in range(n)]


def save_design(design: DesignMatrix, path: str, mask_path: str,
                header_comment: str | None = None) -> None:
    """Design CSV plus a 0/1 mask sidecar with identical layout."""
    header = "period_end,origin,y," + ",".join(design.columns)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write(header + "\n")
        for i in range(design.n_rows):
            cells = [
                design.periods[i].isoformat(),
                design.origins[i].isoformat(),
                repr(float(design.y[i])),
            ]
            cells += [repr(float(v)) for v in design.X[i]]
            fh.write(",".join(cells) + "\n")
    with open(mask_path, "w", encoding="utf-8", newline="\n") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write(header + "\n")
        for i in range(design.n_rows):
            cells = [design.periods[i].isoformat(),
                     design.origins[i].isoformat(), "0"]
            cells += [str(int(v)) for v in design.mask[i]]
            fh.write(",".join(cells) + "\n")
