"""Time-series data model: tensors, CSV ingestion, synthesis, normalization, splits.

The package-wide data layout is a 3-axis float64 array indexed
``(series n, time t, feature f)``. One CSV file holds one multivariate
series (rows = time, columns = features); classification datasets use one
file per labeled instance plus a ``file,label`` manifest.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyInput, InvalidSpec, MalformedCsv, SplitTooSmall


@dataclass
class TimeSeriesTensor:
    """Immutable (n_series, n_time, n_features) array of finite float64 values."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise InvalidSpec(f"expected a 3-axis array, got ndim={v.ndim}")
        n, t, f = v.shape
        if n < 1 or t < 2 or f < 1:
            raise InvalidSpec(f"shape {v.shape} violates N>=1, T>=2, F>=1")
        if not np.all(np.isfinite(v)):
            raise InvalidSpec("values contain NaN or Inf")
        v = v.copy() if v is self.values else v
        v.setflags(write=False)
        self.values = v

    @property
    def n_series(self) -> int:
        return self.values.shape[0]

    @property
    def n_time(self) -> int:
        return self.values.shape[1]

    @property
    def n_features(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class Window:
    """Inclusive time index range [start, end] of length >= 2."""

    start: int
    end: int

    def __post_init__(self):
        if self.start < 0:
            raise InvalidSpec(f"window start {self.start} < 0")
        if self.length < 2:
            raise InvalidSpec(f"window [{self.start},{self.end}] shorter than 2")

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def check_within(self, n_time: int) -> None:
        if self.end >= n_time:
            raise InvalidSpec(
                f"window [{self.start},{self.end}] exceeds time axis of length {n_time}"
            )

    def slice_values(self, t: TimeSeriesTensor) -> np.ndarray:
        """View of the tensor restricted to this window along time."""
        self.check_within(t.n_time)
        return t.values[:, self.start : self.end + 1, :]


@dataclass(frozen=True)
class SplitSpec:
    """Chronological train/val/test fractions, each in (0,1), summing to 1."""

    train_fraction: float = 0.7
    val_fraction: float = 0.1
    test_fraction: float = 0.2

    def __post_init__(self):
        for name, frac in (
            ("train_fraction", self.train_fraction),
            ("val_fraction", self.val_fraction),
            ("test_fraction", self.test_fraction),
        ):
            if not 0.0 < frac < 1.0:
                raise InvalidSpec(f"{name}={frac} not in (0,1)")
        total = self.train_fraction + self.val_fraction + self.test_fraction
        if abs(total - 1.0) > 1e-9:
            raise InvalidSpec(f"fractions sum to {total}, expected 1")


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a synthetic periodic tensor: sum of sinusoids + trend + noise."""

    periods: tuple[float, ...]
    amplitudes: tuple[float, ...] | None = None
    phases: tuple[float, ...] | None = None
    noise_std: float = 0.0
    trend_slope: float = 0.0
    length: int = 200
    n_series: int = 1
    n_features: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "periods", tuple(float(p) for p in self.periods))
        if not self.periods:
            raise InvalidSpec("periods must be nonempty")
        if any(p <= 1.0 for p in self.periods):
            raise InvalidSpec("every period must exceed 1 time step")
        k = len(self.periods)
        amps = self.amplitudes if self.amplitudes is not None else (1.0,) * k
        phis = self.phases if self.phases is not None else (0.0,) * k
        object.__setattr__(self, "amplitudes", tuple(float(a) for a in amps))
        object.__setattr__(self, "phases", tuple(float(p) for p in phis))
        if len(self.amplitudes) != k or len(self.phases) != k:
            raise InvalidSpec("periods, amplitudes and phases must have equal length")
        if self.noise_std < 0:
            raise InvalidSpec("noise_std must be >= 0")
        if self.length < 2 or self.n_series < 1 or self.n_features < 1:
            raise InvalidSpec("length >= 2, n_series >= 1, n_features >= 1 required")


@dataclass(frozen=True)
class NormStats:
    """Per-feature mean and population std used by zscore_normalize."""

    mean: np.ndarray
    std: np.ndarray


def load_csv(path: str | Path, has_timestamp: bool = False) -> TimeSeriesTensor:
    """Load one multivariate series (N=1) from a headered CSV file.

    The first column is dropped when ``has_timestamp`` is set; every
    remaining cell must parse as a finite float.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInput(f"{path}: no header row") from None
        start_col = 1 if has_timestamp else 0
        width = len(header) - start_col
        if width < 1:
            raise MalformedCsv(f"{path}: no feature columns")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise MalformedCsv(
                    f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}"
                )
            try:
                parsed = [float(cell) for cell in row[start_col:]]
            except ValueError as exc:
                raise MalformedCsv(f"{path}:{lineno}: {exc}") from None
            if not all(math.isfinite(x) for x in parsed):
                raise MalformedCsv(f"{path}:{lineno}: non-finite value")
            rows.append(parsed)
    if len(rows) < 2:
        raise EmptyInput(f"{path}: {len(rows)} data row(s), need at least 2")
    return TimeSeriesTensor(np.asarray(rows, dtype=np.float64)[np.newaxis, :, :])


def write_csv(t: TimeSeriesTensor, path: str | Path, feature_names=None) -> None:
    """Write a single-series tensor back out; inverse of load_csv up to float repr."""
    if t.n_series != 1:
        raise InvalidSpec("write_csv handles one series per file (N=1)")
    names = feature_names or [f"f{i}" for i in range(t.n_features)]
    if len(names) != t.n_features:
        raise InvalidSpec("feature_names length must equal n_features")
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in t.values[0]:
            writer.writerow([repr(float(x)) for x in row])


def load_labeled_directory(manifest_path: str | Path, has_timestamp: bool = False):
    """Load a classification dataset from a ``file,label`` manifest CSV.

    Paths are resolved relative to the manifest. Returns
    ``(list[TimeSeriesTensor], list[str])`` in manifest order.
    """
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    tensors, labels = [], []
    with manifest_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["file", "label"]:
            raise MalformedCsv(f"{manifest_path}: expected header 'file,label'")
        for lineno, row in enumerate(reader, start=2):
            if len(row) < 2:
                raise MalformedCsv(f"{manifest_path}:{lineno}: expected file,label")
            tensors.append(load_csv(base / row[0], has_timestamp=has_timestamp))
            labels.append(row[1])
    if not tensors:
        raise EmptyInput(f"{manifest_path}: empty manifest")
    return tensors, labels


def synthesize(spec: SynthSpec) -> TimeSeriesTensor:
    """Deterministically generate Σ_k A_k·sin(2πt/P_k + φ_k) + slope·t + noise.

    The deterministic part is shared by every (series, feature) slice; the
    Gaussian noise is drawn independently per entry from a generator seeded
    with ``spec.seed``, so equal specs give bit-identical tensors.
    """
    t = np.arange(spec.length, dtype=np.float64)
    base = np.zeros(spec.length, dtype=np.float64)
    for period, amp, phase in zip(spec.periods, spec.amplitudes, spec.phases):
        base += amp * np.sin(2.0 * np.pi * t / period + phase)
    base += spec.trend_slope * t
    rng = np.random.default_rng(spec.seed)
    noise = rng.normal(0.0, spec.noise_std, size=(spec.n_series, spec.length, spec.n_features))
    values = base[np.newaxis, :, np.newaxis] + noise
    return TimeSeriesTensor(values)


def zscore_normalize(t: TimeSeriesTensor, stats_from: Window) -> tuple[TimeSeriesTensor, NormStats]:
    """Z-score each feature using mean/population-std from ``stats_from`` only.

    Features constant over the stats window keep std treated as 1, so a
    feature that is constant everywhere maps to all zeros.
    """
    window_vals = stats_from.slice_values(t)
    mean = window_vals.mean(axis=(0, 1))
    std = window_vals.std(axis=(0, 1))  # population (ddof=0)
    safe_std = np.where(std > 0.0, std, 1.0)
    normalized = (t.values - mean) / safe_std
    return TimeSeriesTensor(normalized), NormStats(mean=mean, std=std)


def chronological_split(t: TimeSeriesTensor, s: SplitSpec) -> tuple[Window, Window, Window]:
    """Partition [0, T-1] into contiguous train/val/test windows.

    Boundaries fall at floor(T · cumulative fraction); raises SplitTooSmall
    when any window would be shorter than 2.
    """
    n = t.n_time
    b1 = int(math.floor(n * s.train_fraction))
    b2 = int(math.floor(n * (s.train_fraction + s.val_fraction)))
    lengths = (b1, b2 - b1, n - b2)
    if min(lengths) < 2:
        raise SplitTooSmall(
            f"T={n} with fractions {s.train_fraction}:{s.val_fraction}:{s.test_fraction} "
            f"gives window lengths {lengths}"
        )
    return Window(0, b1 - 1), Window(b1, b2 - 1), Window(b2, n - 1)
