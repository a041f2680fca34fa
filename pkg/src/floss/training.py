"""Training engine: Adam updates and the three training schemes.

Every optimization step samples one wide window from the training tensor,
detects the dominant period on it, and draws ``batch_size`` view pairs
(original window + periodic shift) inside it. The schemes differ in the
companion objective paired with the frequency loss:

* ``self_supervised`` — masked-timestamp reconstruction through a linear
  decoder head; the encoder is meant to be frozen afterwards and task
  heads fitted on its representations (see :mod:`floss.downstream`).
* ``pretrain_finetune`` — the same pretraining, followed by task-loss
  epochs that keep updating the encoder parameters.
* ``joint`` — supervised forecasting loss plus the frequency loss as an
  auxiliary regularizer on the representation.

When a batch admits no feasible shift (or no dominant period), the
frequency term is skipped for that batch and counted in
``TrainReport.skipped_batches``.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .encoder import (
    EncoderConfig,
    EncoderParams,
    backward_from_cache,
    forward_with_cache,
    init_encoder,
)
from .errors import DatasetTooShort, InvalidSpec, NoDominantPeriod, NoFeasibleShift
from .loss import FlossConfig, floss_hierarchical
from .periodicity import PeriodEstimate, detect_period
from .spectral import SpectralTransform
from .timeseries import TimeSeriesTensor, Window
from .views import random_timestamp_indicator, sample_view_pair

SCHEMES = ("self_supervised", "pretrain_finetune", "joint")

# Joint-training loss weights (companion task weight, frequency-loss weight)
# that worked well per dataset in supervised forecasting runs.
WEIGHT_PRESETS = {
    "weather": (0.3, 2.0),
    "exchange_h96": (0.3, 0.7),
    "exchange": (0.3, 0.8),
    "electricity": (0.3, 2.0),
    "ili": (0.3, 0.5),
    "etth1": (0.3, 1.0),
    "etth2": (0.5, 8.0),
    "ettm1": (0.5, 8.0),
    "ettm2": (0.5, 8.0),
}


@dataclass(frozen=True)
class TrainingConfig:
    scheme: str = "self_supervised"
    floss_weight: float = 1.0
    companion_weight: float = 1.0
    batch_size: int = 4
    window_length: int = 96
    epochs: int = 20
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    mask_ratio: float = 0.4
    horizon: int = 24
    steps_per_epoch: int = 0       # 0 = max(1, T // window_length)
    wide_window_length: int = 0    # 0 = min(T, 4 * window_length)
    finetune_epochs: int = 0       # 0 = same as epochs
    freeze_period: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidSpec(f"scheme {self.scheme!r} not one of {SCHEMES}")
        if self.floss_weight < 0 or self.companion_weight < 0:
            raise InvalidSpec("loss weights must be >= 0")
        if self.floss_weight == 0 and self.companion_weight == 0:
            raise InvalidSpec("at least one loss weight must be > 0")
        if min(self.batch_size, self.window_length, self.epochs) < 1:
            raise InvalidSpec("batch_size, window_length and epochs must be >= 1")
        if self.learning_rate <= 0:
            raise InvalidSpec("learning_rate must be > 0")
        if not 0.0 <= self.mask_ratio <= 1.0:
            raise InvalidSpec("mask_ratio must be in [0, 1]")


@dataclass
class LinearHead:
    """Time-distributed or flat affine map used for decoder/task heads."""

    w: np.ndarray
    b: np.ndarray


@dataclass
class TrainReport:
    epoch_floss: list = field(default_factory=list)
    epoch_companion: list = field(default_factory=list)
    epoch_total: list = field(default_factory=list)
    wall_time_s: float = 0.0
    skipped_batches: int = 0
    final_params: EncoderParams | None = None
    recon_head: LinearHead | None = None
    task_head: LinearHead | None = None


class Adam:
    """Standard Adam with bias correction over a flat dict of arrays."""

    def __init__(self, arrays: dict, lr: float, beta1: float, beta2: float, eps: float):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in arrays.items()}
        self.v = {k: np.zeros_like(v) for k, v in arrays.items()}
        self.t = 0

    def step(self, arrays: dict, grads: dict) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for key, g in grads.items():
            m = self.m[key]
            v = self.v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            arrays[key] -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def _flatten_targets(values: np.ndarray, start: int, length: int, horizon: int) -> np.ndarray:
    """(N, H, F) future slice after window [start, start+length-1], flattened per series."""
    tgt = values[:, start + length : start + length + horizon, :]
    return tgt.reshape(tgt.shape[0], -1)


class _StepSampler:
    """Per-step wide-window sampling, detection, and view-pair drawing."""

    def __init__(self, data: TimeSeriesTensor, cfg: TrainingConfig,
                 detection_transform: SpectralTransform, tail_margin: int):
        self.data = data
        self.cfg = cfg
        self.transform = detection_transform
        self.tail_margin = tail_margin  # reserve room for forecast targets
        t = data.n_time
        wide = cfg.wide_window_length or min(t, 4 * cfg.window_length)
        wide = min(wide, t - tail_margin)
        wide = max(wide, 4, cfg.window_length)
        if wide + tail_margin > t:
            raise DatasetTooShort(
                f"T={t} too short for window {cfg.window_length} plus horizon {tail_margin}"
            )
        self.wide_length = wide
        self.frozen_estimate: PeriodEstimate | None = None
        if cfg.freeze_period:
            self.frozen_estimate = detect_period(data, Window(0, t - 1), self.transform)

    def sample(self, rng: np.random.Generator):
        """Returns (wide Window, PeriodEstimate | None)."""
        max_start = self.data.n_time - self.tail_margin - self.wide_length
        start = int(rng.integers(0, max_start + 1))
        wide = Window(start, start + self.wide_length - 1)
        if self.frozen_estimate is not None:
            return wide, self.frozen_estimate
        try:
            return wide, detect_period(self.data, wide, self.transform)
        except NoDominantPeriod:
            return wide, None

    def draw_pairs(self, wide: Window, estimate: PeriodEstimate, rng: np.random.Generator):
        """batch_size view pairs in wide-window-relative coordinates."""
        sub = TimeSeriesTensor(np.array(wide.slice_values(self.data)))
        return [
            sample_view_pair(sub, self.cfg.window_length, estimate, rng)
            for _ in range(self.cfg.batch_size)
        ]

    def draw_plain_starts(self, wide: Window, rng: np.random.Generator):
        """batch_size window starts (relative) when no shift/views are needed."""
        max_rel = self.wide_length - self.cfg.window_length
        return [int(rng.integers(0, max_rel + 1)) for _ in range(self.cfg.batch_size)]


def train(
    data: TimeSeriesTensor,
    cfg: TrainingConfig,
    fcfg: FlossConfig,
    detection_transform: SpectralTransform = SpectralTransform.DFT,
    encoder_cfg: EncoderConfig | None = None,
) -> tuple[EncoderParams, TrainReport]:
    """Run the configured training scheme on (already normalized) data.

    Returns the trained encoder parameters and a TrainReport whose
    per-epoch arrays cover every configured epoch (pretraining plus
    fine-tuning for the ``pretrain_finetune`` scheme). Deterministic for a
    fixed (data, configs, seed).
    """
    started = time.perf_counter()
    if encoder_cfg is None:
        encoder_cfg = EncoderConfig(input_features=data.n_features, seed=cfg.seed)
    elif encoder_cfg.input_features != data.n_features:
        raise InvalidSpec(
            f"encoder expects {encoder_cfg.input_features} features, data has {data.n_features}"
        )
    if data.n_time < cfg.window_length:
        raise DatasetTooShort(f"T={data.n_time} < window_length={cfg.window_length}")
    if encoder_cfg.receptive_field > cfg.window_length:
        warnings.warn(
            f"receptive field {encoder_cfg.receptive_field} exceeds window length "
            f"{cfg.window_length}; early timesteps see zero padding only",
            stacklevel=2,
        )

    params = init_encoder(encoder_cfg)
    head_rng = np.random.default_rng([cfg.seed, 2**16])
    f_in, f_out = encoder_cfg.input_features, encoder_cfg.repr_features
    bound = 1.0 / np.sqrt(f_out)
    recon = LinearHead(head_rng.uniform(-bound, bound, (f_in, f_out)), np.zeros(f_in))
    task = LinearHead(
        head_rng.uniform(-bound, bound, (f_out + 1, cfg.horizon * f_in)),
        np.zeros(cfg.horizon * f_in),
    )

    report = TrainReport()
    steps = cfg.steps_per_epoch or max(1, data.n_time // cfg.window_length)

    if cfg.scheme == "self_supervised":
        phases = [("ssl", cfg.epochs)]
    elif cfg.scheme == "joint":
        phases = [("joint", cfg.epochs)]
    else:
        phases = [("ssl", cfg.epochs), ("task", cfg.finetune_epochs or cfg.epochs)]

    needs_task = any(kind in ("joint", "task") for kind, _ in phases)
    tail = cfg.horizon if needs_task else 0
    sampler = _StepSampler(data, cfg, detection_transform, tail_margin=tail)

    opt_arrays = dict(params.arrays)
    opt_arrays["recon_w"] = recon.w
    opt_arrays["recon_b"] = recon.b
    opt_arrays["task_w"] = task.w
    opt_arrays["task_b"] = task.b
    optimizer = Adam(opt_arrays, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)

    epoch_index = 0
    for kind, n_epochs in phases:
        for _ in range(n_epochs):
            floss_sum = companion_sum = total_sum = 0.0
            for step in range(steps):
                rng = np.random.default_rng([cfg.seed, epoch_index, step])
                f_val, c_val, t_val = _train_step(
                    kind, data, cfg, fcfg, params, recon, task, sampler, rng,
                    opt_arrays, optimizer, report,
                )
                floss_sum += f_val
                companion_sum += c_val
                total_sum += t_val
            report.epoch_floss.append(floss_sum / steps)
            report.epoch_companion.append(companion_sum / steps)
            report.epoch_total.append(total_sum / steps)
            epoch_index += 1

    report.wall_time_s = time.perf_counter() - started
    report.final_params = params
    report.recon_head = recon
    report.task_head = task
    return params, report


def _train_step(kind, data, cfg, fcfg, params, recon, task, sampler, rng,
                opt_arrays, optimizer, report):
    use_floss = cfg.floss_weight > 0 and kind in ("ssl", "joint")
    wide, estimate = sampler.sample(rng)
    pairs = None
    if use_floss:
        if estimate is None:
            report.skipped_batches += 1
        else:
            try:
                pairs = sampler.draw_pairs(wide, estimate, rng)
            except NoFeasibleShift:
                report.skipped_batches += 1
    wide_values = wide.slice_values(data)
    n_series = data.n_series
    length = cfg.window_length

    if pairs is not None:
        rel_starts = [vp.original.start for vp in pairs]
        shift_starts = [vp.shifted.start for vp in pairs]
    else:
        rel_starts = sampler.draw_plain_starts(wide, rng)
        shift_starts = None

    x_orig = np.concatenate([wide_values[:, s : s + length, :] for s in rel_starts])
    batch_rows = x_orig.shape[0]

    if kind == "ssl":
        # One mask per pair, shared by both views so periodic copies stay identical.
        indicators = [
            random_timestamp_indicator(length, cfg.mask_ratio, rng)
            for _ in rel_starts
        ]
        mask = np.concatenate([np.tile(ind, (n_series, 1)) for ind in indicators])
        x_in = x_orig.copy()
        x_in[mask] = 0.0
    else:
        x_in = x_orig

    if shift_starts is not None:
        x_shift = np.concatenate(
            [wide_values[:, s : s + length, :] for s in shift_starts]
        )
        if kind == "ssl":
            x_shift = x_shift.copy()
            x_shift[mask] = 0.0
        x_all = np.concatenate([x_in, x_shift])
    else:
        x_all = x_in

    y_all, state = forward_with_cache(params, x_all)
    y_orig = y_all[:batch_rows]
    upstream = np.zeros_like(y_all)

    floss_val = 0.0
    if shift_starts is not None:
        lr = floss_hierarchical(y_orig, y_all[batch_rows:], fcfg)
        floss_val = lr.total
        upstream[:batch_rows] += cfg.floss_weight * lr.gradient_wrt_y
        upstream[batch_rows:] += cfg.floss_weight * lr.gradient_wrt_yhat

    head_grads = {}
    if kind == "ssl":
        decoded = y_orig @ recon.w.T + recon.b
        diff = (decoded - x_orig) * mask[:, :, np.newaxis]
        n_masked = mask.sum() * data.n_features
        if n_masked > 0:
            companion_val = float((diff**2).sum() / n_masked)
            d_dec = 2.0 * diff / n_masked
            head_grads["recon_w"] = np.einsum("ntf,nth->fh", d_dec, y_orig)
            head_grads["recon_b"] = d_dec.sum(axis=(0, 1))
            upstream[:batch_rows] += cfg.companion_weight * (d_dec @ recon.w)
        else:
            companion_val = 0.0
    else:
        targets = np.concatenate(
            [
                _flatten_targets(data.values, wide.start + s, length, cfg.horizon)
                for s in rel_starts
            ]
        )
        feats = y_orig[:, -1, :]
        feats_aug = np.concatenate([np.ones((batch_rows, 1)), feats], axis=1)
        pred = feats_aug @ task.w + task.b
        err = pred - targets
        companion_val = float((err**2).mean())
        d_pred = 2.0 * err / err.size
        head_grads["task_w"] = feats_aug.T @ d_pred
        head_grads["task_b"] = d_pred.sum(axis=0)
        upstream[:batch_rows, -1, :] += cfg.companion_weight * (d_pred @ task.w[1:].T)

    grads, _ = backward_from_cache(params, state, upstream)
    grads.update({k: cfg.companion_weight * g for k, g in head_grads.items()})
    optimizer.step(opt_arrays, grads)

    total = cfg.floss_weight * floss_val + cfg.companion_weight * companion_val
    return floss_val, companion_val, total
