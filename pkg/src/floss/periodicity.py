"""Dominant-period detection from batch-averaged periodograms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputTooShort, MismatchedShapes, NoDominantPeriod
from .spectral import Periodogram, SpectralTransform, batch_power
from .timeseries import TimeSeriesTensor, Window

# Non-DC power below this is treated as numerically zero (constant input).
POWER_FLOOR = 1e-12


@dataclass
class PeriodEstimate:
    """Dominant frequency bin and the real-valued period it implies.

    ``low_confidence`` marks estimates whose period exceeds half the window
    (dominant bin 1): only one full cycle fits, so the argmax is weakly
    supported.
    """

    dominant_bin: int
    period: float
    power_at_peak: float
    averaged_periodogram: Periodogram
    low_confidence: bool = False


def average_periodogram(grams: list[Periodogram]) -> Periodogram:
    """Elementwise mean of periodograms sharing length and transform."""
    if not grams:
        raise MismatchedShapes("cannot average an empty collection")
    first = grams[0]
    for g in grams[1:]:
        if g.n_input != first.n_input or g.transform is not first.transform:
            raise MismatchedShapes(
                f"(n={g.n_input}, {g.transform.value}) vs "
                f"(n={first.n_input}, {first.transform.value})"
            )
    mean = np.mean(np.stack([g.power for g in grams]), axis=0)
    return Periodogram(mean, first.n_input, first.transform)


def _detect_from_power(mean_power: np.ndarray, n: int, transform: SpectralTransform) -> PeriodEstimate:
    # Candidate bins: DC excluded; bins implying periods < 2 samples excluded
    # (only affects DCT, whose index range runs past the Nyquist limit).
    hi = n // 2
    candidates = mean_power[1 : hi + 1]
    if candidates.size == 0 or np.max(candidates) < POWER_FLOOR:
        raise NoDominantPeriod("no non-DC power above the numerical floor")
    w_hat = 1 + int(np.argmax(candidates))  # ties -> smallest bin
    period = n / w_hat
    return PeriodEstimate(
        dominant_bin=w_hat,
        period=period,
        power_at_peak=float(mean_power[w_hat]),
        averaged_periodogram=Periodogram(mean_power, n, transform),
        low_confidence=bool(period > n / 2),
    )


def detect_period(
    t: TimeSeriesTensor,
    w: Window,
    transform: SpectralTransform = SpectralTransform.DFT,
) -> PeriodEstimate:
    """Detect the dominant period of ``t`` restricted to window ``w``.

    Averages the per-(series, feature) periodograms and takes the argmax
    over non-DC bins; the period is window_length / bin.
    """
    if w.length < 4:
        raise InputTooShort(f"detection window of length {w.length} < 4")
    values = w.slice_values(t)
    power = batch_power(values, transform)  # (N, B, F)
    mean_power = power.mean(axis=(0, 2))
    return _detect_from_power(mean_power, w.length, transform)


def period_histogram(
    t: TimeSeriesTensor,
    window_length: int,
    n_samples: int,
    seed: int = 0,
    transform: SpectralTransform = SpectralTransform.DFT,
) -> dict:
    """Detected periods over uniformly sampled windows, rounded to integers.

    Returns a ``{period_int: count}`` map; windows with no dominant period
    are counted under the ``None`` key. Window starts come from per-sample
    generators derived from (seed, sample index), so the histogram is
    deterministic and order-independent.
    """
    if window_length > t.n_time:
        raise InputTooShort(f"window_length {window_length} > T={t.n_time}")
    if window_length < 4:
        raise InputTooShort(f"window_length {window_length} < 4")
    if n_samples < 1:
        raise InputTooShort("n_samples must be >= 1")
    counts: dict = {}
    max_start = t.n_time - window_length
    for i in range(n_samples):
        rng = np.random.default_rng([seed, i])
        start = int(rng.integers(0, max_start + 1))
        window = Window(start, start + window_length - 1)
        try:
            est = detect_period(t, window, transform)
            key = int(round(est.period))
        except NoDominantPeriod:
            key = None
        counts[key] = counts.get(key, 0) + 1
    return counts
