"""Multiple testing, forecast losses, and predictive-ability tests.

Contains the step-up false-discovery-rate adjustment and its adaptive
variant, the loss functions used for point/quantile/interval forecast
evaluation, the multi-horizon average superior-predictive-ability
bootstrap test, a rolling-window fluctuation test, and descriptive fit
metrics.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

from .estimators import hac_lag_default


class EvaluationError(ValueError):
    pass


@dataclass
class PValueSet:
    labels: list
    raw: np.ndarray
    adjusted: np.ndarray
    method: str


@dataclass
class LossPanel:
    """Loss differentials benchmark minus alternative, (date, horizon)."""

    horizons: list
    dates: list
    d: np.ndarray  # shape (n_dates, n_horizons)

    def __post_init__(self) -> None:
        self.d = np.asarray(self.d, dtype=float)
        if self.d.shape != (len(self.dates), len(self.horizons)):
            raise EvaluationError("panel shape does not match labels")
        if np.isnan(self.d).any():
            raise EvaluationError("panel has missing cells")


@dataclass
class TestReport:
    statistic: float
    p_value: float
    method: str
    config: dict = field(default_factory=dict)
    degenerate: bool = False


def _step_up(sorted_p: np.ndarray, factors: np.ndarray) -> np.ndarray:
    """min(1, p_(j) f_j) with the running minimum from the largest rank."""
    q = np.minimum(1.0, sorted_p * factors)
    return np.minimum.accumulate(q[::-1])[::-1]


def adjust_bh(raw: Sequence[float]) -> np.ndarray:
    """Step-up adjusted p-values: min(1, p_(j) S/j), monotone in rank."""
    p = np.asarray(raw, dtype=float)
    if p.size == 0:
        return p.copy()
    if np.any((p < 0) | (p > 1)):
        raise EvaluationError("p-values must lie in [0, 1]")
    S = p.size
    order = np.argsort(p, kind="stable")
    ranks = np.arange(1, S + 1)
    adjusted_sorted = _step_up(p[order], S / ranks)
    out = np.empty(S)
    out[order] = adjusted_sorted
    return out


def adjust_adaptive_bh(raw: Sequence[float], level: float = 0.10,
                       corrected_first_stage: bool = False) -> np.ndarray:
    """Two-step adjustment that first estimates the count of true nulls.

    Step one applies the plain step-up rule and counts rejections R at
    `level` (or at level/(1+level) when `corrected_first_stage` is set,
    the two-stage variant); the second pass rescales by (S - R)/j.
    With no first-step rejections the plain adjustment is returned
    unchanged.
    """
    if not 0.0 < level < 1.0:
        raise EvaluationError(f"level must be in (0, 1), got {level}")
    p = np.asarray(raw, dtype=float)
    if p.size == 0:
        return p.copy()
    stage1 = level / (1.0 + level) if corrected_first_stage else level
    first = adjust_bh(p)
    R = int(np.count_nonzero(first <= stage1))
    if R == 0:
        return first
    S = p.size
    s0 = S - R
    if s0 == 0:
        s0 = 1  # everything rejected in step one; keep the factor positive
    order = np.argsort(p, kind="stable")
    ranks = np.arange(1, S + 1)
    adjusted_sorted = _step_up(p[order], s0 / ranks)
    out = np.empty(S)
    out[order] = adjusted_sorted
    return out


def loss(kind: str, e: float | np.ndarray, tau: float | None = None):
    """Forecast loss: "squared" e^2, "check" e(tau - 1{e<0}),
    "interval" (tau - 1{e<0})^2."""
    e = np.asarray(e, dtype=float)
    if kind == "squared":
        return e**2
    if tau is None:
        raise EvaluationError(f"loss {kind!r} requires tau")
    indicator = (e < 0).astype(float)
    if kind == "check":
        return e * (tau - indicator)
    if kind == "interval":
        return (tau - indicator) ** 2
    raise EvaluationError(f"unknown loss kind {kind!r}")


def _bartlett_lrv(z: np.ndarray, lags: int) -> float:
    """Bartlett long-run variance of a demeaned series."""
    n = z.shape[0]
    zc = z - z.mean()
    v = float(zc @ zc) / n
    for j in range(1, min(lags, n - 1) + 1):
        w = 1.0 - j / (lags + 1.0)
        v += 2.0 * w * float(zc[j:] @ zc[:-j]) / n
    return max(v, 0.0)


def _bartlett_lrv_rows(Z: np.ndarray, lags: int) -> np.ndarray:
    """Row-wise Bartlett long-run variance for a (B, n) matrix."""
    n = Z.shape[1]
    Zc = Z - Z.mean(axis=1, keepdims=True)
    v = np.einsum("ij,ij->i", Zc, Zc) / n
    for j in range(1, min(lags, n - 1) + 1):
        w = 1.0 - j / (lags + 1.0)
        v += 2.0 * w * np.einsum("ij,ij->i", Zc[:, j:], Zc[:, :-j]) / n
    return np.maximum(v, 0.0)


def _moving_block_indices(
    rng: np.random.Generator, n: int, block_len: int, reps: int
) -> np.ndarray:
    """Circular moving-block bootstrap index matrix of shape (reps, n)."""
    n_blocks = int(np.ceil(n / block_len))
    starts = rng.integers(0, n, size=(reps, n_blocks))
    offsets = np.arange(block_len)
    idx = (starts[:, :, None] + offsets[None, None, :]) % n
    return idx.reshape(reps, n_blocks * block_len)[:, :n]


def aspa_test(
    panel: LossPanel,
    block_len: int = 3,
    reps: int = 999,
    seed: int = 0,
) -> TestReport:
    """Average superior-predictive-ability test across horizons.

    The statistic is sqrt(n) times the mean over horizons of the mean
    loss differential, studentized by a Bartlett long-run variance; the
    one-sided p-value is the fraction of circular moving-block bootstrap
    statistics (recentered, re-studentized) at or above the observed
    one.  Positive differentials mean the alternative beats the
    benchmark.
    """
    d = panel.d
    n = d.shape[0]
    if n < 2 * block_len:
        raise EvaluationError(
            f"need at least {2 * block_len} dates, got {n}"
        )
    z = d.mean(axis=1)  # average differential across horizons, per date
    if np.all(d == 0.0):
        return TestReport(
            statistic=0.0,
            p_value=1.0,
            method="aspa",
            config={"block_len": block_len, "reps": reps, "seed": seed},
            degenerate=True,
        )
    lags = hac_lag_default(n)
    omega = np.sqrt(_bartlett_lrv(z, lags))
    if omega == 0.0:
        return TestReport(
            statistic=0.0,
            p_value=1.0,
            method="aspa",
            config={"block_len": block_len, "reps": reps, "seed": seed},
            degenerate=True,
        )
    stat = float(np.sqrt(n) * z.mean() / omega)

    rng = np.random.default_rng(seed)
    idx = _moving_block_indices(rng, n, block_len, reps)
    z_star = z[idx]
    means = z_star.mean(axis=1)
    omegas = np.sqrt(_bartlett_lrv_rows(z_star, lags))
    stats_star = np.empty(reps)
    good = omegas > 0
    stats_star[good] = np.sqrt(n) * (means[good] - z.mean()) / omegas[good]
    stats_star[~good] = -np.inf
    p_value = float(np.mean(stats_star >= stat))
    return TestReport(
        statistic=stat,
        p_value=p_value,
        method="aspa",
        config={"block_len": block_len, "reps": reps, "seed": seed,
                "hac_lags": lags},
    )


def dm_statistic(d: np.ndarray, hac_lags: int | None = None) -> float:
    """Studentized mean loss differential on one sample."""
    d = np.asarray(d, dtype=float)
    m = d.shape[0]
    lags = hac_lag_default(m) if hac_lags is None else hac_lags
    lrv = _bartlett_lrv(d, lags)
    if lrv == 0.0:
        mean = d.mean()
        return float(np.sign(mean) * np.inf) if mean != 0 else 0.0
    return float(np.sqrt(m) * d.mean() / np.sqrt(lrv))


_CRITICAL_TABLE: list[tuple[float, float]] | None = None


def _critical_table() -> list[tuple[float, float]]:
    global _CRITICAL_TABLE
    if _CRITICAL_TABLE is None:
        ref = resources.files("sentcast.data").joinpath(
            "fluctuation_critical_values.csv"
        )
        rows = []
        with ref.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#") or line.startswith("mu"):
                    continue
                mu, cv = line.split(",")
                rows.append((float(mu), float(cv)))
        _CRITICAL_TABLE = sorted(rows)
    return _CRITICAL_TABLE


def fluctuation_critical_value(mu: float) -> float:
    """One-sided 10% critical value for the max rolling statistic.

    Linear interpolation on the shipped table keyed by the window share
    mu = m/n (values calibrated by simulation under a Gaussian null).
    """
    table = _critical_table()
    mus = np.array([row[0] for row in table])
    cvs = np.array([row[1] for row in table])
    return float(np.interp(mu, mus, cvs))


@dataclass
class FluctuationResult:
    midpoints: list
    statistics: np.ndarray
    critical_value: float
    window: int

    def exceeds(self) -> bool:
        return bool(np.any(self.statistics > self.critical_value))


def fluctuation_test(
    d: Sequence[float],
    window: int | None = None,
    dates: Sequence | None = None,
    hac_lags: int | None = None,
) -> FluctuationResult:
    """Rolling-window studentized mean differentials with a 10% band.

    Each window of length m gets the same statistic a full-sample
    comparison on that slice would produce, stamped at the window
    midpoint.  The default window is 10% of the sample.
    """
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    m = int(round(0.10 * n)) if window is None else int(window)
    if m < 8:
        raise EvaluationError(f"window {m} too small for HAC studentization")
    if m >= n:
        raise EvaluationError(f"window {m} must be below sample size {n}")
    stats_out = np.array(
        [dm_statistic(d[i : i + m], hac_lags=hac_lags) for i in range(n - m + 1)]
    )
    mids = [i + m // 2 for i in range(n - m + 1)]
    if dates is not None:
        mids = [dates[i] for i in mids]
    return FluctuationResult(
        midpoints=mids,
        statistics=stats_out,
        critical_value=fluctuation_critical_value(m / n),
        window=m,
    )


def fit_metrics(
    y: Sequence[float],
    fitted: Sequence[float],
    benchmark_fitted: Sequence[float],
) -> dict[str, float]:
    """R2 and RMSE of a fit, with deltas against a benchmark fit."""
    y = np.asarray(y, dtype=float)
    fitted = np.asarray(fitted, dtype=float)
    bench = np.asarray(benchmark_fitted, dtype=float)
    if not (len(y) == len(fitted) == len(bench)):
        raise EvaluationError("series lengths differ")
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        raise EvaluationError("target has zero variance")

    def r2(f: np.ndarray) -> float:
        return 1.0 - float(np.sum((y - f) ** 2)) / sst

    def rmse(f: np.ndarray) -> float:
        return float(np.sqrt(np.mean((y - f) ** 2)))

    r2_fit, r2_bench = r2(fitted), r2(bench)
    rmse_fit, rmse_bench = rmse(fitted), rmse(bench)
    return {
        "r2": r2_fit,
        "rmse": rmse_fit,
        "r2_benchmark": r2_bench,
        "rmse_benchmark": rmse_bench,
        "delta_r2": r2_fit - r2_bench,
        "pct_delta_rmse": (
            100.0 * (rmse_fit / rmse_bench - 1.0) if rmse_bench > 0 else np.nan
        ),
    }
