"""Task heads on top of frozen representations, and their metrics.

Forecasting follows the frozen-encoder protocol: the feature vector for a
window is its representation at the final timestep, and a closed-form
ridge regression (intercept unpenalized) maps it to the next H values.
Classification pools each instance representation over time by max and
fits an RBF-kernel ridge one-vs-rest model (a closed-form stand-in for an
RBF SVM at this scale). Anomaly scoring compares the representation of
each streaming window against the same window with its last point masked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .encoder import EncoderParams, encode
from .errors import (
    BadRatio,
    DegenerateLabels,
    InvalidSpec,
    ShapeMismatch,
    SingularSystem,
    StreamTooShort,
)
from .timeseries import TimeSeriesTensor

RIDGE_ALPHA_GRID = (0.1, 1.0, 10.0, 100.0)


@dataclass
class ForecastHead:
    """Affine ridge map from F' features (plus intercept) to H·F targets."""

    weights: np.ndarray  # (F' + 1, n_targets)
    alpha: float
    horizon: int

    def predict(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        aug = np.concatenate([np.ones((features.shape[0], 1)), features], axis=1)
        return aug @ self.weights


def _ridge_weights(features: np.ndarray, targets: np.ndarray, alpha: float) -> np.ndarray:
    rows = features.shape[0]
    aug = np.concatenate([np.ones((rows, 1)), features], axis=1)
    gram = aug.T @ aug
    penalty = np.eye(aug.shape[1]) * alpha
    penalty[0, 0] = 0.0  # intercept unpenalized
    return np.linalg.solve(gram + penalty, aug.T @ targets)


def fit_forecaster(
    features,
    targets,
    alpha_grid=RIDGE_ALPHA_GRID,
    val_features=None,
    val_targets=None,
    horizon: int = 0,
) -> ForecastHead:
    """Closed-form ridge over an alpha grid, selected by validation MSE.

    Without a validation set the selection falls back to training MSE
    (ties break toward the smaller alpha).
    """
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim == 1:
        targets = targets[:, np.newaxis]
    if features.shape[0] != targets.shape[0]:
        raise ShapeMismatch(f"{features.shape[0]} feature rows vs {targets.shape[0]} target rows")
    if not (np.all(np.isfinite(features)) and np.all(np.isfinite(targets))):
        raise SingularSystem("non-finite training inputs")

    score_x = features if val_features is None else np.asarray(val_features, dtype=np.float64)
    score_y = targets if val_targets is None else np.asarray(val_targets, dtype=np.float64)
    if score_y.ndim == 1:
        score_y = score_y[:, np.newaxis]

    best = None
    for alpha in sorted(alpha_grid):
        w = _ridge_weights(features, targets, float(alpha))
        aug = np.concatenate([np.ones((score_x.shape[0], 1)), score_x], axis=1)
        mse = float(((aug @ w - score_y) ** 2).mean())
        if best is None or mse < best[0]:
            best = (mse, float(alpha), w)
    return ForecastHead(weights=best[2], alpha=best[1], horizon=horizon)


def evaluate_forecast(head: ForecastHead, features, targets) -> tuple[float, float]:
    """Mean squared and mean absolute error over all predicted entries."""
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim == 1:
        targets = targets[:, np.newaxis]
    pred = head.predict(features)
    if pred.shape != targets.shape:
        raise ShapeMismatch(f"predictions {pred.shape} vs targets {targets.shape}")
    err = pred - targets
    return float((err**2).mean()), float(np.abs(err).mean())


def instance_representation(rep) -> np.ndarray:
    """Temporal max pooling over the full time axis: (N, L, F') -> (N, F')."""
    rep = np.asarray(rep, dtype=np.float64)
    if rep.ndim == 2:  # single series (L, F')
        return rep.max(axis=0)
    if rep.ndim != 3:
        raise ShapeMismatch(f"expected (N, L, F') or (L, F'), got {rep.shape}")
    return rep.max(axis=1)


@dataclass
class ClassifierHead:
    """RBF kernel ridge one-vs-rest classifier state."""

    gamma: float
    lam: float
    support: np.ndarray   # (M, F')
    coef: np.ndarray      # (M, n_classes)
    classes: np.ndarray


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(a, b, "sqeuclidean"))


def fit_classifier(
    features,
    labels,
    gamma: float | None = None,
    lam_grid=RIDGE_ALPHA_GRID,
    val_features=None,
    val_labels=None,
) -> ClassifierHead:
    """Fit RBF kernel ridge one-vs-rest on instance vectors.

    gamma defaults to 1 / (F' · Var(features)); lambda comes from the grid
    by validation accuracy when a validation set is given, else 1.0.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise ShapeMismatch(f"features {features.shape} vs {labels.shape[0]} labels")
    classes = np.unique(labels)
    if classes.size < 2:
        raise DegenerateLabels(f"need >= 2 classes, got {classes.size}")
    if gamma is None:
        var = float(features.var())
        gamma = 1.0 / (features.shape[1] * var) if var > 0 else 1.0

    onehot = np.where(labels[:, np.newaxis] == classes[np.newaxis, :], 1.0, -1.0)
    kernel = rbf_kernel(features, features, gamma)

    def solve(lam):
        return np.linalg.solve(kernel + lam * np.eye(kernel.shape[0]), onehot)

    if val_features is None:
        lam = 1.0
        coef = solve(lam)
    else:
        val_features = np.asarray(val_features, dtype=np.float64)
        val_labels = np.asarray(val_labels)
        best = None
        for lam in sorted(lam_grid):
            coef = solve(float(lam))
            head = ClassifierHead(gamma, float(lam), features, coef, classes)
            acc = float(np.mean(predict_classifier(head, val_features) == val_labels))
            if best is None or acc > best[0]:
                best = (acc, float(lam), coef)
        _, lam, coef = best
    return ClassifierHead(gamma=gamma, lam=float(lam), support=features, coef=coef, classes=classes)


def predict_classifier(head: ClassifierHead, features) -> np.ndarray:
    """Argmax class score; ties break toward the smallest label."""
    features = np.asarray(features, dtype=np.float64)
    scores = rbf_kernel(features, head.support, head.gamma) @ head.coef
    return head.classes[np.argmax(scores, axis=1)]


def anomaly_scores(
    params: EncoderParams,
    stream: TimeSeriesTensor,
    context_length: int,
    metric: str = "l1",
    chunk_size: int = 256,
) -> np.ndarray:
    """Streaming last-point-masked dissimilarity scores, shape (N, T).

    For every t >= context_length - 1 the window ending at t is encoded
    twice — as is, and with its final timestamp zeroed — and the score is
    the dissimilarity of the two representations at that final timestep.
    Warm-up positions (t < context_length - 1) score 0.
    """
    length = int(context_length)
    t_total = stream.n_time
    if length < 1:
        raise StreamTooShort("context_length must be >= 1")
    if t_total < length:
        raise StreamTooShort(f"stream length {t_total} < context {length}")
    if metric not in ("l1", "l2", "cosine"):
        raise InvalidSpec(f"unknown dissimilarity metric {metric!r}")

    scores = np.zeros((stream.n_series, t_total))
    for n in range(stream.n_series):
        series = stream.values[n]  # (T, F)
        windows = np.lib.stride_tricks.sliding_window_view(series, length, axis=0)
        windows = np.ascontiguousarray(np.moveaxis(windows, 2, 1))  # (R, L, F)
        out = np.empty(windows.shape[0])
        for lo in range(0, windows.shape[0], chunk_size):
            batch = windows[lo : lo + chunk_size]
            masked = batch.copy()
            masked[:, -1, :] = 0.0
            reps = encode(params, np.concatenate([batch, masked]))[:, -1, :]
            plain, hidden = reps[: batch.shape[0]], reps[batch.shape[0] :]
            if metric == "l1":
                val = np.abs(plain - hidden).mean(axis=1)
            elif metric == "l2":
                val = np.sqrt(((plain - hidden) ** 2).mean(axis=1))
            else:
                norms = np.linalg.norm(plain, axis=1) * np.linalg.norm(hidden, axis=1)
                safe = np.where(norms > 0, norms, 1.0)
                cos = np.where(norms > 0, (plain * hidden).sum(axis=1) / safe, 1.0)
                val = 1.0 - cos
            out[lo : lo + batch.shape[0]] = val
        scores[n, length - 1 :] = out
    return scores


@dataclass
class AnomalyReport:
    scores: np.ndarray
    threshold: float
    predicted_indices: np.ndarray
    precision: float
    recall: float
    f1: float
    degenerate: bool = False


def threshold_and_score(scores, labels, anomaly_ratio: float) -> AnomalyReport:
    """Quantile threshold at (1 - ratio) plus point-wise precision/recall/F1.

    Metrics with an empty denominator are reported as 0 with the
    ``degenerate`` flag set.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(bool)
    if not 0.0 < anomaly_ratio < 1.0:
        raise BadRatio(f"anomaly_ratio {anomaly_ratio} not in (0, 1)")
    if labels.shape[0] != scores.shape[0]:
        raise BadRatio(f"{labels.shape[0]} labels vs {scores.shape[0]} scores")

    threshold = float(np.quantile(scores, 1.0 - anomaly_ratio))
    predicted = scores > threshold
    tp = int(np.sum(predicted & labels))
    fp = int(np.sum(predicted & ~labels))
    fn = int(np.sum(~predicted & labels))

    degenerate = False
    if tp + fp == 0:
        precision, degenerate = 0.0, True
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall, degenerate = 0.0, True
    else:
        recall = tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return AnomalyReport(
        scores=scores,
        threshold=threshold,
        predicted_indices=np.flatnonzero(predicted),
        precision=float(precision),
        recall=float(recall),
        f1=float(f1),
        degenerate=degenerate,
    )
