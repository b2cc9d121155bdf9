#!/usr/bin/env python3
"""Calibrate the fluctuation-test critical values by simulation.

For each window share mu the one-sided 10% critical value is the 90th
percentile of the maximum rolling studentized mean statistic under an
iid Gaussian null (n = 200, 40,000 replications).  The output is frozen
into src/sentcast/data/fluctuation_critical_values.csv.

Run:  python3 scripts/calibrate_fluctuation.py
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

N = 200
REPS = 40_000
SEED = 7
BATCH = 500
MUS = [round(0.05 * k, 2) for k in range(1, 11)]  # 0.05 .. 0.50


def hac_lags(m: int) -> int:
    return int(np.floor(4.0 * (m / 100.0) ** (2.0 / 9.0)))


def window_stats(Z: np.ndarray, m: int) -> np.ndarray:
    """Max studentized rolling mean per row of Z."""
    W = sliding_window_view(Z, m, axis=1)          # (B, n-m+1, m)
    B, K, _ = W.shape
    flat = W.reshape(B * K, m)
    means = flat.mean(axis=1)
    centered = flat - means[:, None]
    lags = hac_lags(m)
    v = np.einsum("ij,ij->i", centered, centered) / m
    for j in range(1, lags + 1):
        w = 1.0 - j / (lags + 1.0)
        v += 2.0 * w * np.einsum(
            "ij,ij->i", centered[:, j:], centered[:, :-j]
        ) / m
    v = np.maximum(v, 1e-300)
    stats = np.sqrt(m) * means / np.sqrt(v)
    return stats.reshape(B, K).max(axis=1)


def main() -> None:
    rng = np.random.default_rng(SEED)
    maxima = {mu: [] for mu in MUS}
    done = 0
    while done < REPS:
        b = min(BATCH, REPS - done)
        Z = rng.standard_normal((b, N))
        for mu in MUS:
            m = int(round(mu * N))
            maxima[mu].append(window_stats(Z, m))
        done += b
        print(f"\r{done}/{REPS}", end="", flush=True)
    print()
    lines = [
        "# One-sided 10% critical values for the max rolling studentized",
        "# mean statistic; Monte Carlo under an iid Gaussian null",
        f"# (n={N}, {REPS} replications, seed={SEED}).",
        "# Generated by scripts/calibrate_fluctuation.py",
        "mu,critical_value",
    ]
    for mu in MUS:
        allmax = np.concatenate(maxima[mu])
        cv = float(np.quantile(allmax, 0.90))
        lines.append(f"{mu},{cv:.4f}")
        print(f"mu={mu}: cv={cv:.4f}")
    out = "src/sentcast/data/fluctuation_critical_values.csv"
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
