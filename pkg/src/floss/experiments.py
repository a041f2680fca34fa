"""End-to-end experiment pipelines shared by the CLI and the test suite.

Everything here is deterministic given the experiment config and a seed:
data synthesis/loading, normalization statistics from the training
region only, encoder training, and the three task evaluations.
"""

from __future__ import annotations

import csv
import numpy as np

from .config import ExperimentConfig
from .downstream import (
    anomaly_scores,
    evaluate_forecast,
    fit_classifier,
    fit_forecaster,
    instance_representation,
    predict_classifier,
    threshold_and_score,
)
from .encoder import EncoderParams, encode
from .errors import BadConfig, EmptyInput, MalformedCsv, NoDominantPeriod
from .periodicity import detect_period
from .timeseries import (
    SynthSpec,
    TimeSeriesTensor,
    Window,
    chronological_split,
    load_labeled_directory,
    synthesize,
    zscore_normalize,
)
from .training import TrainReport, train


def prepare_series(cfg: ExperimentConfig):
    """Load, split, and z-score a forecasting/anomaly series.

    Returns ``(normalized tensor, (train, val, test) windows)`` with the
    normalization statistics taken from the training window only.
    """
    tensor = cfg.load_tensor()
    windows = chronological_split(tensor, cfg.split_spec())
    normalized, _ = zscore_normalize(tensor, windows[0])
    return normalized, windows


def train_encoder(cfg: ExperimentConfig, scheme: str | None = None, seed: int | None = None):
    """Train on the (normalized) training region of the configured data.

    Forecast/anomaly configs train on the chronological training window;
    classification configs train on the stacked training-split instances.
    """
    if cfg.data["source"] == "synthetic_classify" or cfg.data["label_manifest"]:
        train_tensor, _, _ = classification_training_tensor(cfg)
    else:
        normalized, windows = prepare_series(cfg)
        train_tensor = TimeSeriesTensor(np.array(windows[0].slice_values(normalized)))
    tcfg = cfg.training_config(scheme=scheme, seed=seed)
    ecfg = cfg.encoder_config(train_tensor.n_features, tcfg.seed)
    params, report = train(
        train_tensor, tcfg, cfg.floss_config(), cfg.detection_transform(), encoder_cfg=ecfg
    )
    return params, report


def _detected_period_or_none(normalized: TimeSeriesTensor, window: Window, transform):
    try:
        return float(detect_period(normalized, window, transform).period)
    except NoDominantPeriod:
        return None


def _forecast_rows(rep: np.ndarray, values: np.ndarray, window: Window, horizon: int,
                   warmup: int = 0):
    """Feature rows (rep at t) and flattened H-step targets for one region.

    ``warmup`` drops timesteps whose representation still sees the causal
    zero padding (t below the encoder's receptive field).
    """
    feats, tgts = [], []
    for t in range(max(window.start, warmup), window.end - horizon + 1):
        feats.append(rep[:, t, :])
        tgts.append(values[:, t + 1 : t + 1 + horizon, :].reshape(values.shape[0], -1))
    if not feats:
        raise EmptyInput(f"window {window} too short for horizon {horizon}")
    return np.concatenate(feats), np.concatenate(tgts)


def evaluate_forecast_task(cfg: ExperimentConfig, params: EncoderParams) -> dict:
    """Frozen-encoder ridge forecasting: returns mse/mae/detected_period."""
    normalized, (train_w, val_w, test_w) = prepare_series(cfg)
    horizon = cfg.task["horizon"]
    rep = encode(params, normalized.values)
    warmup = params.config.receptive_field - 1
    tr_x, tr_y = _forecast_rows(rep, normalized.values, train_w, horizon, warmup)
    va_x, va_y = _forecast_rows(rep, normalized.values, val_w, horizon, warmup)
    te_x, te_y = _forecast_rows(rep, normalized.values, test_w, horizon, warmup)
    head = fit_forecaster(
        tr_x, tr_y, alpha_grid=tuple(cfg.task["ridge_alphas"]),
        val_features=va_x, val_targets=va_y, horizon=horizon,
    )
    mse, mae = evaluate_forecast(head, te_x, te_y)
    return {
        "mse": mse,
        "mae": mae,
        "ridge_alpha": head.alpha,
        "detected_period": _detected_period_or_none(normalized, train_w, cfg.detection_transform()),
        "predictions_sample": head.predict(te_x[:1]).ravel().tolist(),
    }


def build_classification_dataset(cfg: ExperimentConfig):
    """Per-class synthetic instances (or manifest-loaded ones) plus splits.

    Returns ``(values (M, L, F), labels (M,), train_idx, val_idx, test_idx)``.
    Synthetic instances of class c are one sinusoid of period
    class_periods[c] with an instance-specific random phase.
    """
    d = cfg.data
    if d["source"] == "synthetic_classify":
        instances, labels = [], []
        for c, period in enumerate(d["class_periods"]):
            rng = np.random.default_rng([d["seed"], c])
            for i in range(d["instances_per_class"]):
                phase = float(rng.uniform(0.0, 2.0 * np.pi))
                spec = SynthSpec(
                    periods=(period,),
                    phases=(phase,),
                    noise_std=d["noise_std"],
                    length=d["instance_length"],
                    n_features=d["n_features"],
                    seed=int(rng.integers(0, 2**31)),
                )
                instances.append(synthesize(spec).values[0])
                labels.append(c)
        values = np.stack(instances)
        labels = np.asarray(labels)
    elif d["label_manifest"]:
        tensors, raw_labels = load_labeled_directory(
            cfg.base_dir / d["label_manifest"], has_timestamp=d["has_timestamp"]
        )
        lengths = {t.n_time for t in tensors}
        if len(lengths) != 1:
            raise BadConfig("classification instances must share one length")
        values = np.concatenate([t.values for t in tensors])
        labels = np.asarray(raw_labels)
    else:
        raise BadConfig("classification needs source='synthetic_classify' or a label_manifest")

    train_idx, val_idx, test_idx = [], [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        n = idx.size
        n_train = max(1, int(n * 0.5))
        n_val = max(1, int(n * 0.25))
        if n_train + n_val >= n:
            raise BadConfig(f"class {cls!r} has too few instances to split")
        train_idx.extend(idx[:n_train])
        val_idx.extend(idx[n_train : n_train + n_val])
        test_idx.extend(idx[n_train + n_val :])
    return values, labels, np.asarray(train_idx), np.asarray(val_idx), np.asarray(test_idx)


def classification_training_tensor(cfg: ExperimentConfig):
    """Training-split instances stacked on the series axis, z-scored globally.

    Returns ``(tensor, mean, std)`` so evaluation can reuse the statistics.
    """
    values, _, train_idx, _, _ = build_classification_dataset(cfg)
    train_values = values[train_idx]
    mean = train_values.mean(axis=(0, 1))
    std = train_values.std(axis=(0, 1))
    std = np.where(std > 0, std, 1.0)
    return TimeSeriesTensor((train_values - mean) / std), mean, std


def macro_f1(y_true: np.ndarray, y_pred: np.ndarray, classes: np.ndarray) -> float:
    scores = []
    for cls in classes:
        tp = np.sum((y_pred == cls) & (y_true == cls))
        fp = np.sum((y_pred == cls) & (y_true != cls))
        fn = np.sum((y_pred != cls) & (y_true == cls))
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom > 0 else 0.0)
    return float(np.mean(scores))


def evaluate_classify_task(cfg: ExperimentConfig, params: EncoderParams) -> dict:
    """Instance-vector classification on frozen representations."""
    values, labels, train_idx, val_idx, test_idx = build_classification_dataset(cfg)
    _, mean, std = classification_training_tensor(cfg)
    normalized = (values - mean) / std
    vectors = instance_representation(encode(params, normalized))
    head = fit_classifier(
        vectors[train_idx], labels[train_idx],
        val_features=vectors[val_idx], val_labels=labels[val_idx],
    )
    pred = predict_classifier(head, vectors[test_idx])
    truth = labels[test_idx]
    per_class = {
        str(cls): float(np.mean(pred[truth == cls] == cls)) for cls in head.classes
    }
    return {
        "accuracy": float(np.mean(pred == truth)),
        "macro_f1": macro_f1(truth, pred, head.classes),
        "n_test": int(test_idx.size),
        "per_class_accuracy": per_class,
    }


def load_anomaly_stream(cfg: ExperimentConfig):
    """Stream tensor plus (N, T) 0/1 labels for the anomaly protocol.

    Synthetic sources inject ``[data].anomaly_spikes`` additive spikes of
    ``spike_sigma`` first-half standard deviations into the second half.
    CSV sources take labels from ``[data].label_column``.
    """
    d = cfg.data
    if d["source"] == "csv" and d["label_column"]:
        path = cfg.base_dir / d["csv_path"]
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        if d["label_column"] not in header:
            raise MalformedCsv(f"{path}: no column named {d['label_column']!r}")
        label_col = header.index(d["label_column"])
        start_col = 1 if d["has_timestamp"] else 0
        feat_cols = [
            i for i in range(start_col, len(header)) if i != label_col
        ]
        try:
            feats = np.asarray([[float(r[i]) for i in feat_cols] for r in rows])
            labels = np.asarray([int(float(r[label_col])) for r in rows])
        except (ValueError, IndexError) as exc:
            raise MalformedCsv(f"{path}: {exc}") from None
        tensor = TimeSeriesTensor(feats[np.newaxis])
        return tensor, labels[np.newaxis]

    tensor = cfg.load_tensor()
    values = tensor.values.copy()
    labels = np.zeros((tensor.n_series, tensor.n_time), dtype=int)
    n_spikes = d["anomaly_spikes"]
    if n_spikes > 0:
        half = tensor.n_time // 2
        for n in range(tensor.n_series):
            rng = np.random.default_rng([d["seed"], 424242, n])
            positions = rng.choice(np.arange(half, tensor.n_time), size=n_spikes, replace=False)
            sigma = values[n, :half, :].std(axis=0)
            values[n, positions, :] += d["spike_sigma"] * sigma
            labels[n, positions] = 1
    return TimeSeriesTensor(values), labels


def evaluate_anomaly_task(cfg: ExperimentConfig, params: EncoderParams) -> dict:
    """Streaming masked-last-point anomaly detection on the second half."""
    stream, labels = load_anomaly_stream(cfg)
    half = stream.n_time // 2
    normalized, _ = zscore_normalize(stream, Window(0, half - 1))
    scores = anomaly_scores(
        params, normalized, cfg.task["anomaly_context"], metric=cfg.task["anomaly_metric"]
    )
    report = threshold_and_score(
        scores[:, half:].ravel(), labels[:, half:].ravel(), cfg.task["anomaly_ratio"]
    )
    return {
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "threshold": report.threshold,
        "degenerate": report.degenerate,
        "scores_eval": scores[:, half:],
        "labels_eval": labels[:, half:],
        "detected_period": _detected_period_or_none(
            normalized, Window(0, half - 1), cfg.detection_transform()
        ),
    }
