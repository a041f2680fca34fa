"""Static SVG plot emission for CLI reports and demos."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def save_line_plot(path, curves: dict, title: str = "", xlabel: str = "", ylabel: str = "") -> None:
    """One SVG line plot; ``curves`` maps legend label -> 1-d sequence."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, ys in curves.items():
        ax.plot(ys, label=label, linewidth=1.2)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if curves:
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(Path(path), format="svg")
    plt.close(fig)


def save_histogram(path, counts: dict, title: str = "", xlabel: str = "", ylabel: str = "count") -> None:
    """Bar chart over histogram keys; the None bucket renders as 'none'."""
    keys = sorted((k for k in counts if k is not None))
    if None in counts:
        keys.append(None)
    labels = [str(k) if k is not None else "none" for k in keys]
    values = [counts[k] for k in keys]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(values)), values)
    ax.set_xticks(range(len(values)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(Path(path), format="svg")
    plt.close(fig)


def save_scores_plot(path, scores, threshold: float, labels=None, title: str = "") -> None:
    """Anomaly score trace with the decision threshold and true anomalies."""
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(scores, linewidth=0.8, label="score")
    ax.axhline(threshold, color="red", linestyle="--", linewidth=1.0, label="threshold")
    if labels is not None:
        idx = [i for i, v in enumerate(labels) if v]
        ax.plot(idx, [scores[i] for i in idx], "x", color="black", markersize=5, label="labeled")
    ax.set_title(title)
    ax.set_xlabel("time")
    ax.set_ylabel("score")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(Path(path), format="svg")
    plt.close(fig)
