import datetime as dt

import numpy as np
import pytest

from sentcast.indicators import SentimentSeries
from sentcast.realtime import (
    Release,
    VintageError,
    VintageStore,
    assign_release_date,
    build_design,
    default_horizon_grid,
    inverse_transform,
    load_vintages,
    save_vintages,
    transform,
)

D = dt.date


def test_transform_growth_example():
    out = transform("CPIAUCSL", [100.0, 102.0])
    assert out[0] == pytest.approx(2.0)


def test_transform_diff_example():
    out = transform("PAYEMS", [150_000.0, 150_250.0])
    assert out[0] == pytest.approx(250.0)


def test_transform_constant_series_zero():
    assert np.allclose(transform("GDPC1", [5.0] * 6), 0.0)
    assert np.allclose(transform("PAYEMS", [5.0] * 6), 0.0)


def test_transform_zero_denominator_errors():
    with pytest.raises(VintageError):
        transform("INDPRO", [0.0, 1.0])


def test_transform_roundtrip():
    rng = np.random.default_rng(0)
    for variable in ("GDPC1", "PAYEMS"):
        levels = 100.0 + np.cumsum(rng.uniform(0.1, 1.0, size=50))
        z = transform(variable, levels)
        back = inverse_transform(variable, levels[0], z)
        assert np.max(np.abs(back - levels) / levels) < 1e-12


def test_cfnai_release_rule():
    assert assign_release_date("CFNAI", D(2011, 3, 31)) == D(2011, 4, 23)
    assert assign_release_date("CFNAI", D(2011, 12, 31)) == D(2012, 1, 23)


def test_configurable_lag_rule():
    got = assign_release_date("XVAR", D(2020, 6, 30), default_lag_days=14)
    assert got == D(2020, 7, 14)


def test_actual_release_wins_over_rule():
    store = VintageStore([
        Release("CFNAI", D(2011, 3, 31), "month", D(2011, 4, 20), 0.1)
    ])
    assert assign_release_date("CFNAI", D(2011, 3, 31), store) == D(2011, 4, 20)


def small_store():
    rows = [
        # (variable, period_end, release_date, value)
        ("GDP", D(2020, 3, 31), D(2020, 4, 28), 100.0),
        ("GDP", D(2020, 3, 31), D(2020, 5, 28), 101.0),
        ("GDP", D(2020, 6, 30), D(2020, 7, 28), 102.0),
        ("CPI", D(2020, 4, 30), D(2020, 5, 12), 50.0),
        ("CPI", D(2020, 5, 31), D(2020, 6, 12), 51.0),
    ]
    return VintageStore(
        [Release(v, p, "quarter" if v == "GDP" else "month", r, x)
         for v, p, r, x in rows]
    )


def test_information_set_hand_walk():
    store = small_store()
    # five as-of dates walked by hand against the table above
    expectations = [
        (D(2020, 4, 27), {}),                               # nothing out
        (D(2020, 4, 28), {("GDP", D(2020, 3, 31)): 100.0}),  # first release day
        (D(2020, 5, 20), {("GDP", D(2020, 3, 31)): 100.0,
                          ("CPI", D(2020, 4, 30)): 50.0}),
        (D(2020, 5, 28), {("GDP", D(2020, 3, 31)): 101.0,   # revision wins
                          ("CPI", D(2020, 4, 30)): 50.0}),
        (D(2020, 7, 31), {("GDP", D(2020, 3, 31)): 101.0,
                          ("GDP", D(2020, 6, 30)): 102.0,
                          ("CPI", D(2020, 4, 30)): 50.0,
                          ("CPI", D(2020, 5, 31)): 51.0}),
    ]
    for as_of, expected in expectations:
        got = {k: r.value for k, r in store.information_set(as_of).items()}
        assert got == expected, as_of


def test_latest_at_day_before_release():
    store = small_store()
    r = store.latest_at("GDP", D(2020, 3, 31), D(2020, 5, 27))
    assert r.value == 100.0  # previous vintage the day before the revision


def test_vintage_dates_must_increase():
    store = small_store()
    with pytest.raises(VintageError):
        store.add(Release("GDP", D(2020, 3, 31), "quarter",
                          D(2020, 5, 1), 99.0))


def test_save_load_round_trip(tmp_path):
    store = small_store()
    path = str(tmp_path / "vintages.csv")
    save_vintages(store, path)
    again = load_vintages(path)
    for var in store.variables():
        assert again.periods(var) == store.periods(var)
        for p in store.periods(var):
            assert again.vintages(var, p) == store.vintages(var, p)


def month_ends(year, months):
    out = []
    for m in months:
        ny, nm = (year + 1, 1) if m == 12 else (year, m + 1)
        out.append(D(ny, nm, 1) - dt.timedelta(days=1))
    return out


def monthly_store(n_months=30, release_lag=10, with_factor=True):
    """Deterministic store: target T with two releases per month."""
    store = VintageStore()
    level = 100.0
    start = D(2018, 1, 1)
    ends = []
    y, m = start.year, start.month
    for _ in range(n_months):
        ny, nm = (y + 1, 1) if m == 12 else (y, m + 1)
        ends.append(D(ny, nm, 1) - dt.timedelta(days=1))
        y, m = ny, nm
    for i, period_end in enumerate(ends):
        level *= 1.0 + 0.01 * np.sin(i)
        first = period_end + dt.timedelta(days=release_lag)
        store.add(Release("T", period_end, "month", first, level))
        store.add(Release("T", period_end, "month",
                          first + dt.timedelta(days=30), level * 1.001))
        if with_factor:
            store.add(Release("CFNAI", period_end, "month",
                              assign_release_date("CFNAI", period_end),
                              float(np.cos(i))))
    return store, ends


def flat_sentiment(start, end):
    n = (end - start).days + 1
    dates = [start + dt.timedelta(days=i) for i in range(n)]
    values = np.sin(np.arange(n) / 20.0)
    return SentimentSeries("economy", "all", dates, values)


def test_build_design_h0_no_masks():
    # release lag 40 puts the target release after every predictor's
    # publication, so at horizon 0 nothing is masked
    store, ends = monthly_store(release_lag=40)
    series = flat_sentiment(D(2017, 12, 1), D(2021, 12, 31))
    design = build_design(store, series, "T", 0, p_lags=3, q_lags=2,
                          w_lags=0, ads_lags=0,
                          weekly_factors=())
    assert not design.mask.any()


def test_build_design_large_h_masks_factor_lag0():
    store, ends = monthly_store()
    series = flat_sentiment(D(2017, 12, 1), D(2021, 12, 31))
    # CFNAI for month m releases on the 23rd of m+1, i.e. at least 23
    # days after period end; target releases 10 days after period end.
    # With h=0 the CFNAI lag-0 cell is always masked; with a very large
    # lead even more is gone.
    d0 = build_design(store, series, "T", 0, p_lags=2, q_lags=1,
                      weekly_factors=())
    j0 = d0.columns.index("CFNAI_lag0")
    assert d0.mask[:, j0].all()
    d_big = build_design(store, series, "T", 60, p_lags=2, q_lags=1,
                         weekly_factors=())
    j1 = d_big.columns.index("CFNAI_lag1")
    assert d_big.mask[:, j1].all()


def test_monotone_information_in_horizon():
    store, _ = monthly_store()
    series = flat_sentiment(D(2017, 12, 1), D(2021, 12, 31))
    d_far = build_design(store, series, "T", 40, p_lags=3, q_lags=2,
                         weekly_factors=())
    d_near = build_design(store, series, "T", 5, p_lags=3, q_lags=2,
                          weekly_factors=())
    periods = [p for p in d_far.periods if p in d_near.periods]
    for p in periods:
        i_far = d_far.periods.index(p)
        i_near = d_near.periods.index(p)
        unmasked_far = ~d_far.mask[i_far]
        unmasked_near = ~d_near.mask[i_near]
        assert np.all(unmasked_near >= unmasked_far)


def test_no_peeking_audit_by_construction():
    store, _ = monthly_store()
    series = flat_sentiment(D(2017, 12, 1), D(2021, 12, 31))
    for h in (0, 7, 30, 75):
        design = build_design(store, series, "T", h, p_lags=3, q_lags=2,
                              weekly_factors=())
        assert design.audit_no_peeking() == []
        # spot check: every unmasked source predates the origin
        for i in range(design.n_rows):
            for j in range(len(design.columns)):
                src = design.source_dates[i, j]
                if src is not None and not design.mask[i, j]:
                    assert src <= design.origins[i]


def test_design_y_uses_requested_release():
    store, ends = monthly_store()
    series = flat_sentiment(D(2017, 12, 1), D(2021, 12, 31))
    d1 = build_design(store, series, "T", 7, p_lags=2, q_lags=1,
                      weekly_factors=(), target_release=1)
    d2 = build_design(store, series, "T", 7, p_lags=2, q_lags=1,
                      weekly_factors=(), target_release=2)
    # second-release growth differs from the first-release growth
    assert not np.allclose(d1.y, d2.y)


def test_unbuildable_design_raises():
    store, _ = monthly_store(n_months=6)
    series = flat_sentiment(D(2018, 1, 1), D(2018, 2, 1))
    with pytest.raises(VintageError):
        build_design(store, series, "T", 7, p_lags=5, q_lags=1,
                     weekly_factors=())


def test_default_horizon_grid_sizes():
    assert len(default_horizon_grid("quarter")) == 69
    assert len(default_horizon_grid("month")) == 25
    assert default_horizon_grid("month")[:3] == [1, 8, 15]
