"""Command implementations for the end-to-end pipeline.

Each cmd_* function takes a PipelineConfig, reads its inputs, writes
CSV artifacts under out_dir, and returns 0 on success.  Every output
carries a `# config_hash=... version=...` comment line so runs are
attributable; identical config and seed give identical bytes.
"""

from __future__ import annotations

import datetime as dt
import logging
import os

import numpy as np
import pandas as pd

from . import __version__, corpus, figas, synth
from .config import ConfigError, PipelineConfig, config_hash
from .estimators import (
    EstimationError,
    double_lasso,
    lasso,
    penalized_qr,
    plugin_lambda,
    qr_plugin_lambda,
    quantile_regression,
    weighted_double_selection,
)
from .evaluation import (
    EvaluationError,
    LossPanel,
    adjust_adaptive_bh,
    adjust_bh,
    aspa_test,
    fit_metrics,
    fluctuation_test,
    loss,
)
from .indicators import (
    SentimentSeries,
    aggregate_daily,
    read_series_csv,
    resample,
    smooth,
    write_series_csv,
)
from .lexicon import load_lexicon
from .realtime import (
    DesignMatrix,
    VintageError,
    build_design,
    default_horizon_grid,
    load_vintages,
    save_design,
)

log = logging.getLogger(__name__)

TENSE_GROUPS = ("all", "past", "present", "future", "nan")
BENCHMARK = "arx"


def _header(config: PipelineConfig) -> str:
    return f"config_hash={config_hash(config)} version={__version__}"


def _require_files(config: PipelineConfig, attrs: list[str]) -> None:
    for attr in attrs:
        path = getattr(config, attr)
        if not path:
            raise ConfigError(f"config key {attr!r} is required")
        if not os.path.exists(path):
            raise ConfigError(f"{attr} path does not exist: {path}")


def _load_topic_specs(config: PipelineConfig) -> list[figas.TopicSpec]:
    if config.topics:
        if not os.path.exists(config.topics):
            raise ConfigError(f"topics path does not exist: {config.topics}")
        return figas.load_topics(config.topics)
    return figas.default_topics()


def _out(config: PipelineConfig, name: str) -> str:
    os.makedirs(config.out_dir, exist_ok=True)
    return os.path.join(config.out_dir, name)


# ---------------------------------------------------------------- score


def cmd_score(config: PipelineConfig) -> int:
    """Score the corpus: chunk CSV plus per-topic/per-tense daily series."""
    _require_files(config, ["corpus", "lexicon"])
    topics = _load_topic_specs(config)
    lex = load_lexicon(config.lexicon)
    policy = figas.LocationPolicy.us_default()

    chunks = []
    with open(config.corpus, "rb") as fh:
        for doc in corpus.parse_corpus(fh):
            for sentence in doc.sentences:
                for topic in topics:
                    chunk = figas.score_sentence(doc, sentence, topic, lex, policy)
                    if chunk is not None:
                        chunks.append(chunk)

    chunk_path = _out(config, "chunk_scores.csv")
    with open(chunk_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {_header(config)}\n")
        fh.write("date,doc_id,sentence_id,topic,tense,score\n")
        for c in chunks:
            fh.write(
                f"{c.date.isoformat()},{c.doc_id},{c.sentence_id},"
                f"{c.topic},{c.tense},{c.score!r}\n"
            )

    series_list = []
    for topic in topics:
        for tense in TENSE_GROUPS:
            series = aggregate_daily(chunks, topic.name, tense)
            if len(series):
                series_list.append(series)
    write_series_csv(_out(config, "series_daily.csv"), series_list,
                     header_comment=_header(config))
    log.info("scored %d chunks from %s", len(chunks), config.corpus)
    return 0


# ------------------------------------------------------------ aggregate


def cmd_aggregate(config: PipelineConfig) -> int:
    """Smooth the daily series and resample to the configured frequency."""
    daily_path = os.path.join(config.out_dir, "series_daily.csv")
    if not os.path.exists(daily_path):
        raise ConfigError(f"missing {daily_path}; run `score` first")
    series_list = read_series_csv(daily_path)
    smoothed = [smooth(s, config.smoothing_window) for s in series_list]
    write_series_csv(_out(config, "series_smoothed.csv"), smoothed,
                     header_comment=_header(config))
    if config.resample != "none":
        resampled = [resample(s, config.resample) for s in smoothed]
        write_series_csv(
            _out(config, f"series_{config.resample}.csv"),
            resampled,
            header_comment=_header(config),
        )
    return 0


# --------------------------------------------------------------- design


def _load_sentiments(config: PipelineConfig) -> dict[str, SentimentSeries]:
    """Smoothed daily series per topic (tense 'all')."""
    daily_path = os.path.join(config.out_dir, "series_daily.csv")
    if not os.path.exists(daily_path):
        raise ConfigError(f"missing {daily_path}; run `score` first")
    out = {}
    for series in read_series_csv(daily_path):
        if series.tense == "all":
            out[series.topic] = smooth(series, config.smoothing_window)
    if not out:
        raise ConfigError("no 'all'-tense series found; rerun `score`")
    return out


def _resolve_horizons(config: PipelineConfig, store) -> list[int]:
    explicit = config.horizon_list()
    if explicit is not None:
        return explicit
    freq = store.frequency(config.target)
    return default_horizon_grid(freq)


def _design_kwargs(config: PipelineConfig) -> dict:
    return dict(
        p_lags=config.p_lags,
        q_lags=config.q_lags,
        w_lags=config.w_lags,
        ads_lags=config.ads_lags,
        target_release=config.target_release,
    )


def cmd_design(config: PipelineConfig) -> int:
    """Write design matrix and mask CSVs for every horizon, after an
    exhaustive no-peeking audit."""
    _require_files(config, ["vintages"])
    store = load_vintages(config.vintages)
    sentiments = _load_sentiments(config)
    if config.sentiment_topic not in sentiments:
        raise ConfigError(f"no series for topic {config.sentiment_topic!r}")
    series = sentiments[config.sentiment_topic]
    horizons = _resolve_horizons(config, store)
    for h in horizons:
        design = build_design(store, series, config.target, h,
                              **_design_kwargs(config))
        bad = design.audit_no_peeking()
        if bad:
            i, j = bad[0]
            raise VintageError(
                f"no-peeking violation at horizon {h}: row "
                f"{design.periods[i]}, column {design.columns[j]}"
            )
        save_design(design, _out(config, f"design_h{h:03d}.csv"),
                    _out(config, f"design_h{h:03d}_mask.csv"),
                    header_comment=_header(config))
    log.info("wrote %d designs for %s", len(horizons), config.target)
    return 0


# ------------------------------------------------------------- insample


def _estimation_frame(design: DesignMatrix, s_col: str = "S"):
    """Rows where the sentiment cell is available; columns fully observed
    on those rows.  Returns (controls, y, s, control names)."""
    s_idx = design.columns.index(s_col)
    rows = [i for i in range(design.n_rows) if not design.mask[i, s_idx]]
    if len(rows) < 10:
        raise VintageError("too few rows with available sentiment")
    sub_mask = design.mask[rows]
    keep = [j for j in range(len(design.columns))
            if not sub_mask[:, j].any()]
    names = [design.columns[j] for j in keep]
    X = design.X[np.ix_(rows, keep)]
    y = design.y[rows]
    s = X[:, names.index(s_col)]
    ctrl_idx = [k for k, nm in enumerate(names) if nm not in ("const", s_col)]
    controls = X[:, ctrl_idx]
    ctrl_names = [names[k] for k in ctrl_idx]
    return controls, y, s, ctrl_names


def cmd_insample(config: PipelineConfig) -> int:
    """Sentiment-coefficient inference per (topic, horizon), with the
    p-values adjusted across horizons per topic."""
    _require_files(config, ["vintages"])
    store = load_vintages(config.vintages)
    sentiments = _load_sentiments(config)
    horizons = _resolve_horizons(config, store)
    taus = [None] if config.estimation == "mean" else config.tau_list()
    adjust = adjust_bh if config.mt_method == "bh" else (
        lambda p: adjust_adaptive_bh(p, level=config.mt_level)
    )

    est_rows = []
    tile_rows = []
    for topic in sorted(sentiments):
        designs = {}
        for h in horizons:
            try:
                designs[h] = build_design(store, sentiments[topic],
                                          config.target, h,
                                          **_design_kwargs(config))
            except VintageError as exc:
                log.warning("design failed for %s at h=%d: %s", topic, h, exc)
                designs[h] = None
        for tau in taus:
            raws = {}
            for h in horizons:
                design = designs[h]
                if design is None:
                    est_rows.append((h, topic, tau, *(np.nan,) * 4))
                    continue
                try:
                    controls, y, s, names = _estimation_frame(design)
                    if tau is None:
                        result = double_lasso(controls, y, s, names=names)
                    else:
                        result = weighted_double_selection(
                            controls, y, s, tau, names=names
                        )
                    e = result.estimate
                    est_rows.append((h, topic, tau, e.beta, e.std_error,
                                     e.t_stat, e.p_value))
                    raws[h] = e.p_value
                except (VintageError, EstimationError) as exc:
                    log.warning("estimation failed for %s h=%d tau=%s: %s",
                                topic, h, tau, exc)
                    est_rows.append((h, topic, tau, *(np.nan,) * 4))
            if raws:
                hs = sorted(raws)
                adjusted = adjust(np.array([raws[h] for h in hs]))
                for h, p_adj in zip(hs, adjusted):
                    tile_rows.append((topic, tau, h, float(p_adj)))

    with open(_out(config, "insample_estimates.csv"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {_header(config)}\n")
        fh.write("horizon,target,sentiment,tau,beta,se,t,p_raw\n")
        for h, topic, tau, beta, se, t, p in est_rows:
            tau_s = "" if tau is None else repr(tau)
            fh.write(f"{h},{config.target},{topic},{tau_s},"
                     f"{beta!r},{se!r},{t!r},{p!r}\n")
    with open(_out(config, "insample_tiles.csv"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {_header(config)}\n")
        fh.write("target,sentiment,tau,horizon,p_adj\n")
        for topic, tau, h, p_adj in tile_rows:
            tau_s = "" if tau is None else repr(tau)
            fh.write(f"{config.target},{topic},{tau_s},{h},{p_adj!r}\n")
    return 0


# ------------------------------------------------------------- forecast


def _augment_design(base: DesignMatrix,
                    topic_designs: dict[str, DesignMatrix]) -> DesignMatrix:
    """Base design plus one sentiment column per topic."""
    blocks_x, blocks_m, blocks_s, names = [base.X], [base.mask], [base.source_dates], list(base.columns)
    for topic in sorted(topic_designs):
        d = topic_designs[topic]
        if d.periods != base.periods:
            raise VintageError("topic design rows differ from base design")
        j = d.columns.index("S")
        blocks_x.append(d.X[:, [j]])
        blocks_m.append(d.mask[:, [j]])
        blocks_s.append(d.source_dates[:, [j]])
        names.append(f"S_{topic}")
    return DesignMatrix(
        target=base.target,
        horizon_days=base.horizon_days,
        columns=names,
        X=np.hstack(blocks_x),
        mask=np.hstack(blocks_m),
        y=base.y,
        periods=base.periods,
        origins=base.origins,
        release_dates=base.release_dates,
        y_release_dates=base.y_release_dates,
        source_dates=np.hstack(blocks_s),
    )


def _usable(design: DesignMatrix, rows: list[int],
            exclude: tuple[str, ...] = ()) -> tuple[np.ndarray, list[str]]:
    sub = design.mask[rows]
    keep = [j for j, nm in enumerate(design.columns)
            if nm not in exclude and not sub[:, j].any()]
    return design.X[np.ix_(rows, keep)], [design.columns[j] for j in keep]


def _fit_predict(X: np.ndarray, y: np.ndarray, x_new: np.ndarray,
                 names: list[str], tau: float | None, kind: str) -> float:
    """kind: 'ols' (X includes const) or 'lasso' (penalized selection)."""
    no_const = [k for k, nm in enumerate(names) if nm != "const"]
    if kind == "ols":
        if tau is None:
            beta, *_ = np.linalg.lstsq(X, y, rcond=None)
            return float(x_new @ beta)
        beta = quantile_regression(X[:, no_const], y, tau)
        return float(np.concatenate([[1.0], x_new[no_const]]) @ beta)
    if kind == "lasso":
        Xs, xs_new = X[:, no_const], x_new[no_const]
        if tau is None:
            fit = lasso(Xs, y, plugin_lambda(Xs, y))
            return float(fit.intercept + xs_new @ fit.coef)
        lam = qr_plugin_lambda(len(y), Xs.shape[1], tau)
        beta = penalized_qr(Xs, y, tau, lam)
        return float(np.concatenate([[1.0], xs_new]) @ beta)
    raise ValueError(kind)


def cmd_forecast(config: PipelineConfig) -> int:
    """Real-time out-of-sample forecasts for every model and horizon."""
    _require_files(config, ["vintages"])
    store = load_vintages(config.vintages)
    sentiments = _load_sentiments(config)
    topics = sorted(sentiments)
    horizons = _resolve_horizons(config, store)
    taus = [None] if config.estimation == "mean" else config.tau_list()
    scheme = config.oos_scheme

    out_rows = []
    skipped = 0
    for h in horizons:
        base = build_design(store, None, config.target, h,
                            **_design_kwargs(config))
        topic_designs = {
            t: build_design(store, sentiments[t], config.target, h,
                            **_design_kwargs(config))
            for t in topics
        }
        full = _augment_design(base, topic_designs)
        s_cols = [full.columns.index(f"S_{t}") for t in topics]
        rows_with_s = [i for i in range(full.n_rows)
                       if not full.mask[i, s_cols].any()]
        if not rows_with_s:
            raise VintageError(
                f"no rows with sentiment available at horizon {h}"
            )
        if config.oos_start:
            try:
                oos_start = dt.date.fromisoformat(config.oos_start)
            except ValueError:
                raise ConfigError(
                    f"bad oos_start date {config.oos_start!r}"
                ) from None
        else:
            cut = rows_with_s[int(0.6 * len(rows_with_s))]
            oos_start = full.release_dates[cut]
        oos_rows = [i for i in rows_with_s
                    if full.release_dates[i] >= oos_start]

        for i in oos_rows:
            origin = full.origins[i]
            eligible = [j for j in rows_with_s
                        if full.y_release_dates[j] <= origin]
            if scheme == "rolling":
                eligible = eligible[-config.rolling_window:]
            if len(eligible) < config.min_train:
                skipped += 1
                log.info("skipping origin %s at h=%d: %d < %d train rows",
                         origin, h, len(eligible), config.min_train)
                continue
            rows = eligible + [i]
            for tau in taus:
                forecasts = {}
                X, names = _usable(base, rows)
                forecasts[BENCHMARK] = _fit_predict(
                    X[:-1], base.y[eligible], X[-1], names, tau, "ols")
                for topic in topics:
                    d = topic_designs[topic]
                    Xt, names_t = _usable(d, rows)
                    forecasts[f"arxs_{topic}"] = _fit_predict(
                        Xt[:-1], d.y[eligible], Xt[-1], names_t, tau, "ols")
                forecasts["average"] = float(np.mean(
                    [forecasts[f"arxs_{t}"] for t in topics]))
                Xf, names_f = _usable(full, rows)
                forecasts["lasso"] = _fit_predict(
                    Xf[:-1], full.y[eligible], Xf[-1], names_f, tau, "lasso")
                for model, value in forecasts.items():
                    out_rows.append(
                        (model, config.target, h,
                         "" if tau is None else repr(tau),
                         origin.isoformat(), full.periods[i].isoformat(),
                         value, float(full.y[i]))
                    )
    if skipped:
        log.warning("skipped %d origins with insufficient history", skipped)
    with open(_out(config, "forecasts.csv"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {_header(config)}\n")
        fh.write("model,target,horizon,tau,origin,period_end,forecast,actual\n")
        for row in out_rows:
            model, target, h, tau_s, origin, pe, f, a = row
            fh.write(f"{model},{target},{h},{tau_s},{origin},{pe},{f!r},{a!r}\n")
    log.info("wrote %d forecasts", len(out_rows))
    return 0


# ------------------------------------------------------------- evaluate


def _loss_panel(frame: pd.DataFrame, bench: pd.DataFrame, kind: str,
                tau: float | None) -> LossPanel:
    merged = frame.merge(
        bench,
        on=["period_end", "horizon"],
        suffixes=("", "_bench"),
        how="outer",
        indicator=True,
    )
    missing = merged[merged["_merge"] != "both"]
    if len(missing):
        row = missing.iloc[0]
        raise EvaluationError(
            f"misaligned panels: missing cell for date {row['period_end']}, "
            f"horizon {row['horizon']}"
        )
    merged["d"] = (
        loss(kind, merged["actual"] - merged["forecast_bench"], tau)
        - loss(kind, merged["actual"] - merged["forecast"], tau)
    )
    pivot = merged.pivot(index="period_end", columns="horizon", values="d")
    pivot = pivot.dropna(axis=0)
    return LossPanel(
        horizons=list(pivot.columns),
        dates=list(pivot.index),
        d=pivot.to_numpy(),
    )


def cmd_evaluate(config: PipelineConfig) -> int:
    """aSPA reports, fluctuation statistics, and fit metrics from the
    stored forecasts."""
    fc_path = os.path.join(config.out_dir, "forecasts.csv")
    if not os.path.exists(fc_path):
        raise ConfigError(f"missing {fc_path}; run `forecast` first")
    frame = pd.read_csv(fc_path, comment="#", keep_default_na=False)
    for col in ("forecast", "actual"):
        frame[col] = frame[col].astype(float)
    frame["horizon"] = frame["horizon"].astype(int)
    models = sorted(set(frame["model"]))
    taus = sorted(set(frame["tau"].astype(str)))
    hash_ = config_hash(config)

    aspa_rows = []
    fluct_rows = []
    fit_rows = []
    for tau_s in taus:
        tau = float(tau_s) if tau_s else None
        sub = frame[frame["tau"].astype(str) == tau_s]
        bench = sub[sub["model"] == BENCHMARK][
            ["period_end", "horizon", "forecast", "actual"]
        ]
        if bench.empty:
            raise EvaluationError(f"no benchmark forecasts for tau={tau_s!r}")
        losses = [("squared", None)] if tau is None else [("check", tau)]
        if tau is not None and abs(tau - config.interval_tau) < 1e-12:
            losses.append(("interval", tau))
        for model in models:
            mf = sub[sub["model"] == model][
                ["period_end", "horizon", "forecast", "actual"]
            ]
            for kind, ltau in losses:
                panel = _loss_panel(mf, bench, kind, ltau)
                report = aspa_test(panel, block_len=config.aspa_block_len,
                                   reps=config.aspa_reps, seed=config.seed)
                method = kind if tau is None else f"{kind}@{tau_s}"
                aspa_rows.append(
                    (config.target, model, method, report.statistic,
                     report.p_value, hash_, int(report.degenerate))
                )
                # fluctuation at one representative horizon
                if kind != "interval" and model != BENCHMARK:
                    h_sel = (panel.horizons[0] if config.fluct_horizon < 0
                             else config.fluct_horizon)
                    if h_sel in panel.horizons:
                        d = panel.d[:, panel.horizons.index(h_sel)]
                        m = int(round(config.fluct_window_share * len(d)))
                        if m >= 8 and m < len(d):
                            res = fluctuation_test(d, window=m,
                                                   dates=panel.dates)
                            for mid, stat in zip(res.midpoints,
                                                 res.statistics):
                                fluct_rows.append(
                                    (config.target, model, h_sel, mid,
                                     float(stat), res.critical_value)
                                )
                        else:
                            log.warning(
                                "fluctuation window %d unusable for n=%d",
                                m, len(d))
            if model != BENCHMARK:
                merged = mf.merge(bench, on=["period_end", "horizon"],
                                  suffixes=("", "_bench"))
                for h_val, grp in merged.groupby("horizon"):
                    try:
                        metrics = fit_metrics(grp["actual"], grp["forecast"],
                                              grp["forecast_bench"])
                    except EvaluationError:
                        continue
                    fit_rows.append(
                        (config.target, model, tau_s, int(h_val),
                         metrics["r2"], metrics["rmse"],
                         metrics["delta_r2"], metrics["pct_delta_rmse"])
                    )

    with open(_out(config, "evaluate_aspa.csv"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {_header(config)}\n")
        fh.write("target,sentiment,method,statistic,p_value,"
                 "config_hash,degenerate\n")
        for row in aspa_rows:
            target, model, method, stat, p, hsh, deg = row
            fh.write(f"{target},{model},{method},{stat!r},{p!r},{hsh},{deg}\n")
    with open(_out(config, "evaluate_fluctuation.csv"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {_header(config)}\n")
        fh.write("target,model,horizon,midpoint,statistic,critical_value\n")
        for target, model, h_val, mid, stat, cv in fluct_rows:
            fh.write(f"{target},{model},{h_val},{mid},{stat!r},{cv!r}\n")
    with open(_out(config, "evaluate_fit.csv"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {_header(config)}\n")
        fh.write("target,model,tau,horizon,r2,rmse,delta_r2,pct_delta_rmse\n")
        for target, model, tau_s, h_val, r2, rmse, dr2, drmse in fit_rows:
            fh.write(f"{target},{model},{tau_s},{h_val},"
                     f"{r2!r},{rmse!r},{dr2!r},{drmse!r}\n")
    return 0


# ---------------------------------------------------------------- synth


def cmd_synth(config: PipelineConfig) -> int:
    """Generate the synthetic corpus, lexicon, vintages, and manifest."""
    spec = synth.SynthConfig(
        seed=config.seed,
        start=dt.date.fromisoformat(config.synth_start),
        years=config.synth_years,
        eta=config.synth_eta,
        rho=config.synth_rho,
        gamma=config.synth_gamma,
        noise_sd=config.synth_noise_sd,
        h0_days=config.synth_h0_days,
        driver_topic=config.synth_driver,
        target=config.target,
        smoothing_window=config.smoothing_window,
        sentences_per_day=config.synth_sentences_per_day,
    )
    manifest = synth.generate(spec, config.out_dir)
    log.info("synthesized %d documents, %d sentences",
             manifest["n_documents"], manifest["n_sentences"])
    return 0
