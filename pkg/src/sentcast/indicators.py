"""Daily sentiment indicators: aggregation, smoothing, resampling.

A series is calendar-complete at daily frequency between its first and
last observation; days with no scored sentences carry 0 (the sum over an
empty set), so the level reflects both volume and tone.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .figas import ChunkScore

FREQ_ALIASES = {"weekly": "W", "monthly": "ME", "quarterly": "QE"}


@dataclass
class SentimentSeries:
    topic: str
    tense: str  # "all" or one of the tense categories
    dates: list[dt.date] = field(default_factory=list)
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    smoothing_window: int | None = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if len(self.dates) != len(self.values):
            raise ValueError("dates and values must have equal length")
        for a, b in zip(self.dates, self.dates[1:]):
            if a >= b:
                raise ValueError("dates must be strictly increasing")

    def __len__(self) -> int:
        return len(self.dates)

    def value_on(self, day: dt.date) -> float | None:
        """Series value on `day`, None when outside the covered range."""
        if not self.dates or day < self.dates[0] or day > self.dates[-1]:
            return None
        pos = np.searchsorted(np.array(self.dates, dtype="datetime64[D]"),
                              np.datetime64(day, "D"))
        if pos < len(self.dates) and self.dates[pos] == day:
            return float(self.values[pos])
        return None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "date": pd.to_datetime(self.dates),
                "topic": self.topic,
                "tense": self.tense,
                "value": self.values,
            }
        )


def aggregate_daily(
    chunks: Iterable[ChunkScore],
    topic: str,
    tense: str = "all",
) -> SentimentSeries:
    """Sum chunk scores per day for one topic (optionally one tense).

    The result covers every calendar day between the first and last
    matching chunk, zero-filled where nothing was scored.
    """
    totals: dict[dt.date, float] = {}
    for chunk in chunks:
        if chunk.topic != topic:
            continue
        if tense != "all" and chunk.tense != tense:
            continue
        totals[chunk.date] = totals.get(chunk.date, 0.0) + chunk.score
    if not totals:
        return SentimentSeries(topic=topic, tense=tense)
    first, last = min(totals), max(totals)
    n_days = (last - first).days + 1
    dates = [first + dt.timedelta(days=i) for i in range(n_days)]
    values = np.array([totals.get(d, 0.0) for d in dates])
    return SentimentSeries(topic=topic, tense=tense, dates=dates, values=values)


def smooth(series: SentimentSeries, window: int) -> SentimentSeries:
    """Trailing moving average over the last `window` calendar days.

    Only past days enter each average, so a smoothed value is in the
    information set of its own date.  At the head of the series the
    average runs over the days available so far.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if len(series) == 0:
        return SentimentSeries(series.topic, series.tense,
                               smoothing_window=window)
    smoothed = (
        pd.Series(series.values)
        .rolling(window=window, min_periods=1)
        .mean()
        .to_numpy()
    )
    return SentimentSeries(
        topic=series.topic,
        tense=series.tense,
        dates=list(series.dates),
        values=smoothed,
        smoothing_window=window,
    )


def resample(series: SentimentSeries, frequency: str) -> SentimentSeries:
    """Mean of daily values per period, stamped at the period end.

    `frequency` is "weekly" (ISO weeks ending Sunday), "monthly", or
    "quarterly".
    """
    if frequency not in FREQ_ALIASES:
        raise ValueError(f"unknown frequency {frequency!r}")
    if len(series) == 0:
        return SentimentSeries(series.topic, series.tense,
                               smoothing_window=series.smoothing_window)
    s = pd.Series(series.values, index=pd.to_datetime(series.dates))
    out = s.resample(FREQ_ALIASES[frequency]).mean().dropna()
    return SentimentSeries(
        topic=series.topic,
        tense=series.tense,
        dates=[ts.date() for ts in out.index],
        values=out.to_numpy(),
        smoothing_window=series.smoothing_window,
    )


def write_series_csv(
    path: str,
    series_list: Sequence[SentimentSeries],
    header_comment: str | None = None,
) -> None:
    """`date,topic,tense,value` rows, ISO dates, stable float formatting."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("date,topic,tense,value\n")
        for series in series_list:
            for day, value in zip(series.dates, series.values):
                fh.write(f"{day.isoformat()},{series.topic},"
                         f"{series.tense},{float(value)!r}\n")


def read_series_csv(path: str) -> list[SentimentSeries]:
    # keep_default_na: the tense label "nan" is a real category, not missing
    frame = pd.read_csv(path, comment="#", parse_dates=["date"],
                        keep_default_na=False)
    frame["value"] = frame["value"].astype(float)
    out = []
    for (topic, tense), group in frame.groupby(["topic", "tense"], sort=True):
        group = group.sort_values("date")
        out.append(
            SentimentSeries(
                topic=str(topic),
                tense=str(tense),
                dates=[ts.date() for ts in group["date"]],
                values=group["value"].to_numpy(),
            )
        )
    return out
