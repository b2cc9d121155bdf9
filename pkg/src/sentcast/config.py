"""Flat key=value pipeline configuration with CLI overrides."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    # input and output paths
    corpus: str = ""
    lexicon: str = ""
    topics: str = ""  # empty = built-in six topics
    vintages: str = ""
    out_dir: str = "out"
    # scoring and aggregation
    smoothing_window: int = 30
    resample: str = "monthly"
    # design
    target: str = "TGT"
    p_lags: int = 6
    q_lags: int = 3
    w_lags: int = 4
    ads_lags: int = 8
    horizons: str = "auto"  # "auto" or comma-separated day counts
    target_release: int = 2
    sentiment_topic: str = "economy"
    # estimation and multiple testing
    estimation: str = "mean"  # "mean" | "quantile"
    taus: str = "0.1,0.5,0.9"
    mt_method: str = "adaptive_bh"  # "bh" | "adaptive_bh"
    mt_level: float = 0.10
    # out-of-sample scheme
    oos_start: str = ""  # ISO date; empty = last 40% of target periods
    oos_scheme: str = "rolling"  # "rolling" | "recursive"
    rolling_window: int = 96
    min_train: int = 24
    # evaluation
    aspa_block_len: int = 3
    aspa_reps: int = 999
    fluct_window_share: float = 0.10
    fluct_horizon: int = -1  # -1 = first horizon in the grid
    interval_tau: float = 0.1
    # randomness
    seed: int = 42
    # synthetic-data generation
    synth_start: str = "2003-01-01"
    synth_years: int = 13
    synth_eta: float = 0.5
    synth_rho: float = 0.3
    synth_gamma: float = 0.4
    synth_noise_sd: float = 0.10
    synth_h0_days: int = 8
    synth_driver: str = "economy"
    synth_sentences_per_day: float = 6.0

    def tau_list(self) -> list[float]:
        try:
            taus = [float(t) for t in self.taus.split(",") if t.strip()]
        except ValueError:
            raise ConfigError(f"bad taus value {self.taus!r}") from None
        for tau in taus:
            if not 0.0 < tau < 1.0:
                raise ConfigError(f"tau {tau} outside (0, 1)")
        return taus

    def horizon_list(self) -> list[int] | None:
        """Explicit horizon grid, or None for the frequency default."""
        if self.horizons.strip() == "auto":
            return None
        try:
            grid = [int(h) for h in self.horizons.split(",") if h.strip()]
        except ValueError:
            raise ConfigError(f"bad horizons value {self.horizons!r}") from None
        if not grid:
            raise ConfigError("horizon grid is empty")
        return grid


_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def _coerce(key: str, value: str):
    ftype = _FIELDS[key].type
    try:
        if ftype == "int":
            return int(value)
        if ftype == "float":
            return float(value)
        return value
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def load_config(path: str | None, overrides: dict | None = None) -> PipelineConfig:
    """Read `key = value` lines; `#` comments allowed; overrides win."""
    config = PipelineConfig()
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                for lineno, raw in enumerate(fh, start=1):
                    line = raw.strip()
                    if not line or line.startswith("#"):
                        continue
                    if "=" not in line:
                        raise ConfigError(
                            f"{path}:{lineno}: expected 'key = value'"
                        )
                    key, value = (s.strip() for s in line.split("=", 1))
                    if key not in _FIELDS:
                        raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                    setattr(config, key, _coerce(key, value))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown override {key!r}")
        setattr(config, key, value)
    if config.estimation not in ("mean", "quantile"):
        raise ConfigError(f"estimation must be mean|quantile, "
                          f"got {config.estimation!r}")
    if config.mt_method not in ("bh", "adaptive_bh"):
        raise ConfigError(f"mt_method must be bh|adaptive_bh, "
                          f"got {config.mt_method!r}")
    if config.oos_scheme not in ("rolling", "recursive"):
        raise ConfigError(f"oos_scheme must be rolling|recursive, "
                          f"got {config.oos_scheme!r}")
    config.tau_list()
    config.horizon_list()
    return config


def config_hash(config: PipelineConfig) -> str:
    payload = "\n".join(
        f"{f.name}={getattr(config, f.name)}"
        for f in dataclasses.fields(PipelineConfig)
    )
    return hashlib.sha1(payload.encode("utf-8")).hexdigest()[:12]
