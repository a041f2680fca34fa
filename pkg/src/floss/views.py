"""Periodic-shift view pairs and timestamp masking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec, NoFeasibleShift
from .periodicity import PeriodEstimate
from .timeseries import TimeSeriesTensor, Window


@dataclass(frozen=True)
class ViewPair:
    """A window and its copy shifted by round(a · period) time steps."""

    original: Window
    shifted: Window
    shift_multiple: int
    shift_steps: int
    period_used: float

    def __post_init__(self):
        if self.shift_multiple == 0:
            raise InvalidSpec("shift multiple a must be nonzero")
        if self.shift_steps == 0:
            raise InvalidSpec("shift_steps must be nonzero")
        if self.shifted.start != self.original.start + self.shift_steps:
            raise InvalidSpec("shifted window start inconsistent with shift_steps")
        if self.shifted.length != self.original.length:
            raise InvalidSpec("view windows must have equal length")


@dataclass(frozen=True)
class MaskSpec:
    """Timestamp masking recipe: fraction masked, mode, and seed."""

    mask_ratio: float = 0.0
    mode: str = "random_timestamps"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.mask_ratio <= 1.0:
            raise InvalidSpec(f"mask_ratio {self.mask_ratio} not in [0,1]")
        if self.mode not in ("random_timestamps", "last_point"):
            raise InvalidSpec(f"unknown mask mode {self.mode!r}")


def _rounded_shift(a: int, period: float) -> int:
    # One rounding of a·p, never per-period accumulation.
    return int(np.rint(a * period))


def _feasible_multiples(t1: int, length: int, n_time: int, period: float) -> list:
    """All nonzero integers a whose rounded shift keeps both windows in bounds."""
    max_forward = n_time - length - t1  # largest admissible positive shift
    max_backward = t1                   # largest admissible negative shift
    out = []
    a = 1
    while _rounded_shift(a, period) <= max_forward:
        out.append(a)
        a += 1
    a = -1
    while _rounded_shift(-a, period) <= max_backward:
        out.append(a)
        a -= 1
    return out


def sample_view_pair(
    t: TimeSeriesTensor,
    window_length: int,
    p: PeriodEstimate,
    rng: np.random.Generator,
) -> ViewPair:
    """Sample an original window plus a periodically shifted copy.

    The start t1 is uniform over starts that admit at least one shift; the
    multiple a is uniform over the feasible nonzero integers for that start
    (both directions when both fit). Raises NoFeasibleShift when the series
    is too short for any shift.
    """
    length = int(window_length)
    n_time = t.n_time
    if length < 2:
        raise InvalidSpec(f"window_length {length} < 2")
    one_step = _rounded_shift(1, p.period)
    if n_time < length + one_step:
        raise NoFeasibleShift(
            f"T={n_time} cannot fit a window of {length} plus a shift of {one_step}"
        )
    starts = np.arange(n_time - length + 1)
    # A start is feasible iff a = +1 or a = -1 fits; larger |a| only shifts further.
    feasible = (starts + one_step <= n_time - length) | (starts - one_step >= 0)
    starts = starts[feasible]
    if starts.size == 0:
        raise NoFeasibleShift("no window start admits a nonzero periodic shift")
    t1 = int(rng.choice(starts))
    multiples = _feasible_multiples(t1, length, n_time, p.period)
    a = int(multiples[rng.integers(0, len(multiples))])
    shift = _rounded_shift(a, p.period)
    return ViewPair(
        original=Window(t1, t1 + length - 1),
        shifted=Window(t1 + shift, t1 + shift + length - 1),
        shift_multiple=a,
        shift_steps=shift,
        period_used=p.period,
    )


def apply_mask(
    t: TimeSeriesTensor, w: Window, m: MaskSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Zero out masked timestamps of a window slice.

    Returns ``(masked_values, indicator)`` where ``masked_values`` is a
    writable (N, L, F) copy with masked timestamps set to 0 (inputs are
    assumed already normalized) and ``indicator`` is a boolean (L,) array
    marking them. ``last_point`` masks exactly the final index; the random
    mode masks exactly round(ratio·L) timestamps chosen without replacement
    by a generator seeded from the MaskSpec.
    """
    values = w.slice_values(t).copy()
    length = w.length
    indicator = np.zeros(length, dtype=bool)
    if m.mode == "last_point":
        indicator[length - 1] = True
    else:
        n_masked = int(round(m.mask_ratio * length))
        if n_masked > 0:
            rng = np.random.default_rng(m.seed)
            chosen = rng.choice(length, size=n_masked, replace=False)
            indicator[np.sort(chosen)] = True
    values[:, indicator, :] = 0.0
    return values, indicator


def mask_array(values: np.ndarray, indicator: np.ndarray) -> np.ndarray:
    """Zero the masked timestamps of a raw (N, L, F) array (copy)."""
    out = values.copy()
    out[:, indicator, :] = 0.0
    return out


def random_timestamp_indicator(length: int, mask_ratio: float, rng: np.random.Generator) -> np.ndarray:
    """Boolean mask with exactly round(ratio·length) True entries."""
    indicator = np.zeros(length, dtype=bool)
    n_masked = int(round(mask_ratio * length))
    if n_masked > 0:
        chosen = rng.choice(length, size=n_masked, replace=False)
        indicator[np.sort(chosen)] = True
    return indicator
