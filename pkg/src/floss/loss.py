"""Frequency-domain loss between two representations, flat and hierarchical.

The flat loss is the L1 distance between the per-(series, feature)
spectral densities of two equally shaped representations, divided by
N'·F' (not by bin count; see ``FlossConfig.normalize_by_bins``).

The hierarchical variant repeats the comparison at successively
max-pooled temporal resolutions: compute the flat loss, pool both inputs
with kernel=stride=τ (ceil semantics, partial tail window kept), compute
again, until the pooled length reaches 1; the total is the mean over
levels. Pooling shrinks the frequency axis, so deeper levels weight the
low-frequency structure that periodic behaviour lives in.

All gradients are exact (reverse mode): |·|' taken as sign with 0 at
ties, max-pool routing via recorded argmax indices (ties to the earliest
index), and the periodogram chain rules

* DFT: dΦ_j/dy_t = (2/√L)·(Re X_j · cos θ_jt − Im X_j · sin θ_jt),
  θ_jt = 2πjt/L, matching the forward convention in :mod:`floss.spectral`;
* DCT: dΦ_j/dy_t = sign(C_j) · basis_jt, applied through the orthonormal
  inverse transform.

Both chain rules remain valid at length 1, where they reduce to the
degenerate single-point spectra Φ = y² (DFT) and Φ = |y| (DCT).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import BadScale, InputTooShort, ShapeMismatch
from .spectral import SpectralTransform

_dft_basis_cache: dict = {}


@dataclass(frozen=True)
class FlossConfig:
    """Loss configuration: transform, pooling scale, hierarchy switches."""

    transform: SpectralTransform = SpectralTransform.DCT
    pooling_scale: int = 2
    hierarchical: bool = True
    include_length_one_level: bool = True
    normalize_by_bins: bool = False

    def __post_init__(self):
        if self.hierarchical and self.pooling_scale < 2:
            raise BadScale(f"pooling_scale {self.pooling_scale} < 2")


@dataclass
class LossReport:
    """Per-level losses, level count d, total = sum/d, and input gradients."""

    per_level_losses: list
    level_count: int
    total: float
    gradient_wrt_y: np.ndarray
    gradient_wrt_yhat: np.ndarray
    level_lengths: list = field(default_factory=list)


def _dft_basis(length: int):
    cached = _dft_basis_cache.get(length)
    if cached is None:
        bins = np.arange(length // 2 + 1, dtype=np.float64)
        t = np.arange(length, dtype=np.float64)
        theta = 2.0 * np.pi * np.outer(bins, t) / length
        cached = (np.cos(theta), np.sin(theta))
        _dft_basis_cache[length] = cached
    return cached


def _power_forward(y: np.ndarray, transform: SpectralTransform):
    """Spectral power along the time axis of (N, L, F), plus backward cache."""
    if transform is SpectralTransform.DFT:
        coef = np.fft.rfft(y, axis=1) / np.sqrt(y.shape[1])
        return coef.real**2 + coef.imag**2, coef
    coef = scipy.fft.dct(y, type=2, norm="ortho", axis=1)
    return np.abs(coef), coef


def _power_backward(s: np.ndarray, coef: np.ndarray, length: int, transform: SpectralTransform):
    """Chain an upstream dL/dΦ (N, B, F) back to dL/dy (N, L, F)."""
    if transform is SpectralTransform.DFT:
        cos_b, sin_b = _dft_basis(length)
        re_part = np.einsum("nbf,bt->ntf", s * coef.real, cos_b)
        im_part = np.einsum("nbf,bt->ntf", s * coef.imag, sin_b)
        return (2.0 / np.sqrt(length)) * (re_part - im_part)
    # Orthonormal DCT: the adjoint of the forward transform is its inverse.
    return scipy.fft.idct(s * np.sign(coef), type=2, norm="ortho", axis=1)


def _check_pair(y: np.ndarray, yhat: np.ndarray):
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.ndim != 3 or yhat.ndim != 3:
        raise ShapeMismatch(f"expected (N, L, F) arrays, got {y.shape} and {yhat.shape}")
    if y.shape != yhat.shape:
        raise ShapeMismatch(f"shape {y.shape} != {yhat.shape}")
    return y, yhat


def _flat_level(y, yhat, transform, normalize_by_bins):
    power_y, coef_y = _power_forward(y, transform)
    power_h, coef_h = _power_forward(yhat, transform)
    diff = power_y - power_h
    denom = y.shape[0] * y.shape[2]
    if normalize_by_bins:
        denom *= power_y.shape[1]
    loss = float(np.abs(diff).sum() / denom)
    s = np.sign(diff) / denom
    grad_y = _power_backward(s, coef_y, y.shape[1], transform)
    grad_h = _power_backward(-s, coef_h, y.shape[1], transform)
    return loss, grad_y, grad_h


def floss_flat(
    y,
    yhat,
    transform: SpectralTransform = SpectralTransform.DCT,
    normalize_by_bins: bool = False,
):
    """Single-resolution frequency loss and its gradients.

    Returns ``(loss, grad_wrt_y, grad_wrt_yhat)`` for (N, L, F) inputs with
    L >= 2.
    """
    y, yhat = _check_pair(y, yhat)
    if y.shape[1] < 2:
        raise InputTooShort(f"time axis of length {y.shape[1]} < 2")
    return _flat_level(y, yhat, transform, normalize_by_bins)


def maxpool_time(y, pooling_scale: int):
    """Non-overlapping temporal max pooling with the partial tail kept.

    Returns ``(pooled, argmax_map)`` where ``pooled`` has time length
    ceil(L/τ) and ``argmax_map`` holds, per pooled cell, the input time
    index that won (ties to the earliest), for gradient routing.
    """
    if pooling_scale < 2:
        raise BadScale(f"pooling scale {pooling_scale} < 2")
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 3:
        raise ShapeMismatch(f"expected (N, L, F), got {y.shape}")
    n, length, f = y.shape
    if length < 2:
        raise InputTooShort(f"time axis of length {length} < 2")
    n_out = -(-length // pooling_scale)
    pad = n_out * pooling_scale - length
    if pad:
        filler = np.full((n, pad, f), -np.inf)
        y = np.concatenate([y, filler], axis=1)
    blocks = y.reshape(n, n_out, pooling_scale, f)
    local_arg = blocks.argmax(axis=2)
    pooled = np.take_along_axis(blocks, local_arg[:, :, np.newaxis, :], axis=2)[:, :, 0, :]
    argmax_map = local_arg + (np.arange(n_out) * pooling_scale)[np.newaxis, :, np.newaxis]
    return pooled, argmax_map


def maxpool_backward(grad_pooled: np.ndarray, argmax_map: np.ndarray, input_length: int):
    """Scatter pooled-level gradients back to the pre-pooling time axis."""
    n, n_out, f = grad_pooled.shape
    out = np.zeros((n, input_length, f))
    n_idx = np.arange(n)[:, np.newaxis, np.newaxis]
    f_idx = np.arange(f)[np.newaxis, np.newaxis, :]
    np.add.at(out, (n_idx, argmax_map, f_idx), grad_pooled)
    return out


def floss_hierarchical(y, yhat, cfg: FlossConfig) -> LossReport:
    """Multi-resolution frequency loss with gradients routed through pooling.

    Computes the flat loss at full resolution, then repeatedly pools both
    inputs by ``cfg.pooling_scale`` and adds the loss of the pooled pair
    until the length reaches 1 (the final single-point level uses the
    degenerate spectra; skip it with ``include_length_one_level=False``).
    The report's total is the level sum divided by the level count, and
    the gradients include the same 1/d factor. With ``hierarchical=False``
    the report holds the single full-resolution level.
    """
    y, yhat = _check_pair(y, yhat)
    if y.shape[1] < 2:
        raise InputTooShort(f"time axis of length {y.shape[1]} < 2")

    grad_y_total = np.zeros_like(y)
    grad_h_total = np.zeros_like(yhat)
    per_level, lengths = [], []
    maps_y, maps_h = [], []  # (argmax_map, input_length) per pooling step
    cur_y, cur_h = y, yhat

    while True:
        level_len = cur_y.shape[1]
        loss, grad_y, grad_h = _flat_level(cur_y, cur_h, cfg.transform, cfg.normalize_by_bins)
        per_level.append(loss)
        lengths.append(level_len)
        for amap, in_len in reversed(maps_y):
            grad_y = maxpool_backward(grad_y, amap, in_len)
        for amap, in_len in reversed(maps_h):
            grad_h = maxpool_backward(grad_h, amap, in_len)
        grad_y_total += grad_y
        grad_h_total += grad_h

        if not cfg.hierarchical or level_len == 1:
            break
        pooled_y, map_y = maxpool_time(cur_y, cfg.pooling_scale)
        pooled_h, map_h = maxpool_time(cur_h, cfg.pooling_scale)
        maps_y.append((map_y, level_len))
        maps_h.append((map_h, level_len))
        cur_y, cur_h = pooled_y, pooled_h
        if cur_y.shape[1] == 1 and not cfg.include_length_one_level:
            break

    d = len(per_level)
    return LossReport(
        per_level_losses=per_level,
        level_count=d,
        total=float(sum(per_level) / d),
        gradient_wrt_y=grad_y_total / d,
        gradient_wrt_yhat=grad_h_total / d,
        level_lengths=lengths,
    )


def level_length_sequence(length: int, pooling_scale: int, include_length_one_level: bool = True):
    """The temporal lengths the hierarchical loss visits for a given L and τ."""
    if pooling_scale < 2:
        raise BadScale(f"pooling scale {pooling_scale} < 2")
    seq = [length]
    while seq[-1] > 1:
        nxt = -(-seq[-1] // pooling_scale)
        if nxt == 1 and not include_length_one_level:
            break
        seq.append(nxt)
    return seq
