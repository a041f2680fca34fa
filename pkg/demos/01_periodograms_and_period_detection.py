#!/usr/bin/env python3
"""Walk through spectral density estimation and dominant-period detection.

Builds a noisy hourly-style series with a daily cycle, compares its DFT
and DCT periodograms, detects the dominant period from the batch-averaged
spectrum, and samples a period histogram over random windows.

Run from the repo root:  python demos/01_periodograms_and_period_detection.py
Outputs land in demos/output/.
"""

from pathlib import Path

import numpy as np

from floss import (
    SpectralTransform,
    SynthSpec,
    Window,
    batch_periodogram,
    detect_period,
    period_histogram,
    synthesize,
)
from floss.periodicity import average_periodogram
from floss.plots import save_histogram, save_line_plot

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# --- a noisy daily cycle, sampled hourly for ~12 weeks -------------------
spec = SynthSpec(periods=(24.0,), amplitudes=(1.0,), noise_std=0.3, length=2000, seed=7)
series = synthesize(spec)
print(f"series: {series.n_series} x {series.n_time} x {series.n_features}")

# --- periodograms of the first 168-hour week -----------------------------
week = Window(0, 167)
for transform in (SpectralTransform.DFT, SpectralTransform.DCT):
    grams = batch_periodogram(week.slice_values(series), transform)
    avg = average_periodogram(grams)
    top = np.argsort(avg.power[1:])[::-1][:3] + 1
    print(f"{transform.value}: strongest non-DC bins {top.tolist()} "
          f"(bin 7 <-> period 168/7 = 24h)")
    save_line_plot(
        OUT / f"periodogram_{transform.value}.svg",
        {f"{transform.value} power": avg.power.tolist()},
        title=f"Average {transform.value.upper()} periodogram, one week of hourly data",
        xlabel="frequency bin",
        ylabel="power",
    )

# --- dominant period of the full series ----------------------------------
est = detect_period(series, Window(0, series.n_time - 1))
print(f"dominant period over the full series: {est.period:.2f} steps "
      f"(bin {est.dominant_bin}, low confidence: {est.low_confidence})")

# --- histogram over 200 random week-long windows --------------------------
counts = period_histogram(series, window_length=168, n_samples=200, seed=0)
mode = max((k for k in counts if k is not None), key=lambda k: counts[k])
print(f"histogram over 200 windows: mode {mode} "
      f"({counts[mode]}/200 windows), buckets {dict(sorted((str(k), v) for k, v in counts.items()))}")
save_histogram(OUT / "period_histogram.svg", counts,
               title="Detected periods over 200 random windows (length 168)",
               xlabel="period (steps)")
print(f"plots written to {OUT}/")
