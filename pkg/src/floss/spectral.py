"""Spectral density estimation: DFT and DCT periodograms.

Normalization conventions (fixed across the package):

* DFT: X_j = (1/sqrt(n)) · Σ_t x_t·exp(-2πi·j·t/n), power Φ_j = Re² + Im²,
  stored for the non-redundant half spectrum j = 0..floor(n/2). With this
  scaling a constant c maps to Φ_0 = n·c² and Parseval holds over the full
  spectrum without extra factors.
* DCT: orthonormal DCT-II — C_j = α_j · Σ_t x_t·cos(π·j·(2t+1)/(2n)) with
  α_0 = 1/sqrt(n) and α_j = sqrt(2/n) otherwise; power Φ_j = |C_j| for all
  n bins j = 0..n-1. A constant c maps to Φ_0 = c·sqrt(n).

Fast paths (pocketfft / scipy) are numerically equal to the direct
summations; the direct sums are kept as oracles in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.fft

from .errors import InputTooShort, InvalidSpec


class SpectralTransform(Enum):
    DFT = "dft"
    DCT = "dct"

    @classmethod
    def parse(cls, name: str) -> "SpectralTransform":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise InvalidSpec(f"unknown transform {name!r}, expected 'dft' or 'dct'") from None


def n_bins(n: int, transform: SpectralTransform) -> int:
    """Number of stored power bins for an input of length n."""
    return n // 2 + 1 if transform is SpectralTransform.DFT else n


@dataclass
class Periodogram:
    """Nonnegative per-frequency power of one sequence."""

    power: np.ndarray
    n_input: int
    transform: SpectralTransform

    def __post_init__(self):
        p = np.asarray(self.power, dtype=np.float64)
        if p.ndim != 1:
            raise InvalidSpec("power must be one-dimensional")
        if p.shape[0] != n_bins(self.n_input, self.transform):
            raise InvalidSpec(
                f"{p.shape[0]} bins inconsistent with n={self.n_input} "
                f"under {self.transform.value}"
            )
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise InvalidSpec("power values must be finite and >= 0")
        self.power = p


def _dft_power(x: np.ndarray, axis: int = -1) -> np.ndarray:
    coef = np.fft.rfft(x, axis=axis) / np.sqrt(x.shape[axis])
    return coef.real**2 + coef.imag**2


def _dct_power(x: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.abs(scipy.fft.dct(x, type=2, norm="ortho", axis=axis))


def periodogram_dft(x) -> Periodogram:
    """Half-spectrum DFT periodogram of a 1-d sequence (n >= 2)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise InputTooShort(f"need a 1-d sequence of length >= 2, got shape {x.shape}")
    return Periodogram(_dft_power(x), x.shape[0], SpectralTransform.DFT)


def periodogram_dct(x) -> Periodogram:
    """Full-length DCT periodogram |C_j| of a 1-d sequence (n >= 2)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise InputTooShort(f"need a 1-d sequence of length >= 2, got shape {x.shape}")
    return Periodogram(_dct_power(x), x.shape[0], SpectralTransform.DCT)


def batch_power(values: np.ndarray, transform: SpectralTransform) -> np.ndarray:
    """Power of every (series, feature) slice of a (N, T, F) array -> (N, B, F)."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 3:
        raise InvalidSpec(f"expected (N, T, F), got shape {values.shape}")
    if values.shape[1] < 2:
        raise InputTooShort(f"time axis of length {values.shape[1]} < 2")
    if transform is SpectralTransform.DFT:
        return _dft_power(values, axis=1)
    return _dct_power(values, axis=1)


def batch_periodogram(t, transform: SpectralTransform) -> list[Periodogram]:
    """Per-(series, feature) periodograms of a tensor or raw (N, T, F) array.

    Output order is series-major, feature-minor: (0,0), (0,1), ..., (1,0), ...
    """
    values = t.values if hasattr(t, "values") else np.asarray(t, dtype=np.float64)
    power = batch_power(values, transform)
    n = values.shape[1]
    return [
        Periodogram(power[i, :, j], n, transform)
        for i in range(power.shape[0])
        for j in range(power.shape[2])
    ]
