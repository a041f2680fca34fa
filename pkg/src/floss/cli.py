"""Command-line surface: detect-period, train, evaluate, ablate.

Every command writes ``report.json`` (validated against
``schemas/report.schema.json``) plus SVG plots into ``--out``. Reports
are serialized with sorted keys; rerunning a command with the same seed
reproduces every field byte-for-byte except ``wall_time_s``.

Exit codes: 0 success, 2 user/data error, 3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import os
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .config import ExperimentConfig
from .encoder import load_checkpoint, save_checkpoint
from .errors import FlossError, NoDominantPeriod
from .experiments import (
    evaluate_anomaly_task,
    evaluate_classify_task,
    evaluate_forecast_task,
    prepare_series,
    train_encoder,
)
from .periodicity import detect_period, period_histogram
from .plots import save_histogram, save_line_plot, save_scores_plot
from .spectral import SpectralTransform
from .timeseries import Window, load_csv

EXIT_OK = 0
EXIT_USER = 2
EXIT_INTERNAL = 3

WEIGHT_SWEEP = (0.0, 0.1, 0.3, 0.5, 1.0, 2.0)
TAU_SWEEP = (2, 3, 4, 8)
TRANSFORM_SWEEP = (
    ("dft", "dft", "fft_detect+fft_loss"),
    ("dft", "dct", "fft_detect+dct_loss"),
    ("dct", "dft", "dct_detect+fft_loss"),
)


def _schema():
    with resources.files("floss.schemas").joinpath("report.schema.json").open("rb") as fh:
        return json.load(fh)


def write_report(report: dict, out_dir: Path) -> Path:
    """Validate against the published schema, then write report.json."""
    jsonschema.validate(report, _schema())
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _resolve_seed(args, config_seed: int = 0) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("FLOSS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise FlossError(f"FLOSS_SEED={env!r} is not an integer") from None
    return config_seed


def cmd_detect_period(args) -> int:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    tensor = load_csv(args.input, has_timestamp=args.has_timestamp)
    transform = SpectralTransform.parse(args.transform)
    try:
        est = detect_period(tensor, Window(0, tensor.n_time - 1), transform)
        headline = {
            "dominant_bin": est.dominant_bin,
            "period": est.period,
            "power_at_peak": est.power_at_peak,
            "low_confidence": est.low_confidence,
        }
    except NoDominantPeriod:
        headline = {"dominant_bin": None, "period": None, "power_at_peak": None,
                    "low_confidence": None}
    window = min(args.window, tensor.n_time)
    counts = period_histogram(tensor, window, args.samples, seed=seed, transform=transform)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_histogram(
        out_dir / "period_histogram.svg", counts,
        title=f"Detected periods over {args.samples} windows of length {window}",
        xlabel="period (time steps)",
    )
    report = {
        "command": "detect-period",
        "input": str(args.input),
        "window": window,
        "samples": args.samples,
        "transform": transform.value,
        "seed": seed,
        "histogram": {("none" if k is None else str(k)): v for k, v in counts.items()},
        "wall_time_s": time.perf_counter() - started,
        **headline,
    }
    path = write_report(report, out_dir)
    print(path)
    return EXIT_OK


def cmd_train(args) -> int:
    started = time.perf_counter()
    cfg = ExperimentConfig.load(args.config)
    seed = _resolve_seed(args, cfg.training["seed"])
    scheme = args.scheme or cfg.training["scheme"]
    params, report = train_encoder(cfg, scheme=scheme, seed=seed)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = Path(args.out_checkpoint) if args.out_checkpoint else out_dir / "checkpoint.json"
    ckpt_path.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(
        params, ckpt_path, seed=seed,
        metadata={
            "scheme": scheme,
            "floss_weight": cfg.training["floss_weight"],
            "window_length": cfg.training["window_length"],
        },
    )
    save_line_plot(
        out_dir / "loss_curves.svg",
        {
            "frequency loss": report.epoch_floss,
            "companion loss": report.epoch_companion,
            "total": report.epoch_total,
        },
        title=f"Training curves ({scheme})",
        xlabel="epoch",
        ylabel="loss",
    )
    payload = {
        "command": "train",
        "seed": seed,
        "scheme": scheme,
        "epochs_recorded": len(report.epoch_total),
        "epoch_floss": report.epoch_floss,
        "epoch_companion": report.epoch_companion,
        "epoch_total": report.epoch_total,
        "skipped_batches": report.skipped_batches,
        "checkpoint": str(ckpt_path),
        "config_echo": cfg.as_dict(),
        "wall_time_s": time.perf_counter() - started,
    }
    path = write_report(payload, out_dir)
    print(path)
    return EXIT_OK


def _null_metrics() -> dict:
    return {
        "mse": None, "mae": None, "accuracy": None, "macro_f1": None,
        "precision": None, "recall": None, "f1": None, "detected_period": None,
    }


def cmd_evaluate(args) -> int:
    started = time.perf_counter()
    cfg = ExperimentConfig.load(args.config)
    seed = _resolve_seed(args, cfg.training["seed"])
    params, ckpt_seed, metadata = load_checkpoint(args.checkpoint)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    metrics = _null_metrics()
    if args.task == "forecast":
        result = evaluate_forecast_task(cfg, params)
        metrics.update({k: result[k] for k in ("mse", "mae", "detected_period")})
        normalized, (_, _, test_w) = prepare_series(cfg)
        horizon = cfg.task["horizon"]
        pred0 = np.asarray(result["predictions_sample"]).reshape(horizon, normalized.n_features)
        truth = normalized.values[0, test_w.start + 1 : test_w.start + 1 + horizon, 0]
        save_line_plot(
            out_dir / "forecast_sample.svg",
            {"truth": truth.tolist(), "prediction": pred0[:, 0].tolist()},
            title="First test-window forecast (feature 0)",
            xlabel="step", ylabel="normalized value",
        )
    elif args.task == "classify":
        result = evaluate_classify_task(cfg, params)
        metrics.update({k: result[k] for k in ("accuracy", "macro_f1")})
        save_histogram(
            out_dir / "per_class_accuracy.svg",
            {k: v for k, v in result["per_class_accuracy"].items()},
            title="Held-out accuracy per class",
            xlabel="class", ylabel="accuracy",
        )
    else:
        result = evaluate_anomaly_task(cfg, params)
        metrics.update(
            {k: result[k] for k in ("precision", "recall", "f1", "detected_period")}
        )
        save_scores_plot(
            out_dir / "anomaly_scores.svg",
            result["scores_eval"][0], result["threshold"], result["labels_eval"][0],
            title="Anomaly scores on the evaluation half",
        )

    payload = {
        "command": "evaluate",
        "task": args.task,
        "seed": seed,
        "scheme": metadata.get("scheme"),
        "floss_weight": metadata.get("floss_weight"),
        "config_echo": cfg.as_dict(),
        "wall_time_s": time.perf_counter() - started,
        **metrics,
    }
    path = write_report(payload, out_dir)
    print(path)
    return EXIT_OK


def _sweep_cells(cfg: ExperimentConfig, sweep: str):
    """(description dict, modified config) per sweep cell."""
    if sweep == "weight":
        return [
            ({"floss_weight": w}, cfg.replace("training", floss_weight=w))
            for w in WEIGHT_SWEEP
        ]
    if sweep == "tau":
        return [
            ({"pooling_scale": tau}, cfg.replace("floss", pooling_scale=tau))
            for tau in TAU_SWEEP
        ]
    if sweep == "transform":
        return [
            (
                {"label": label, "detection_transform": det, "loss_transform": loss},
                cfg.replace("floss", detection_transform=det, transform=loss),
            )
            for det, loss, label in TRANSFORM_SWEEP
        ]
    if sweep == "hierarchical":
        return [
            ({"hierarchical": flag}, cfg.replace("floss", hierarchical=flag))
            for flag in (True, False)
        ]
    raise FlossError(f"unknown sweep {sweep!r}")


def cmd_ablate(args) -> int:
    started = time.perf_counter()
    cfg = ExperimentConfig.load(args.config)
    seed = _resolve_seed(args, cfg.training["seed"])
    cells = _sweep_cells(cfg, args.sweep)

    def run_cell(index_cell):
        index, (desc, cell_cfg) = index_cell
        cell_seed = seed + 7919 * index
        params, _ = train_encoder(cell_cfg, seed=cell_seed)
        result = evaluate_forecast_task(cell_cfg, params)
        return {"cell": index, **desc, "mse": result["mse"], "mae": result["mae"]}

    with concurrent.futures.ThreadPoolExecutor(max_workers=min(4, len(cells))) as pool:
        rows = list(pool.map(run_cell, enumerate(cells)))
    rows.sort(key=lambda r: r["cell"])

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    table_path = out_dir / "table.csv"
    fieldnames = sorted({key for row in rows for key in row})
    with table_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    labels = [
        str(next(v for k, v in row.items() if k not in ("cell", "mse", "mae")))
        for row in rows
    ]
    save_line_plot(
        out_dir / "sweep_mse.svg",
        {"test MSE": [row["mse"] for row in rows]},
        title=f"{args.sweep} sweep ({', '.join(labels)})",
        xlabel="cell", ylabel="MSE",
    )
    payload = {
        "command": "ablate",
        "sweep": args.sweep,
        "seed": seed,
        "rows": rows,
        "table_csv": str(table_path),
        "config_echo": cfg.as_dict(),
        "wall_time_s": time.perf_counter() - started,
    }
    path = write_report(payload, out_dir)
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floss",
        description="Periodicity detection, frequency-regularized training, and task evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect-period", help="periodogram-based period detection + histogram")
    p.add_argument("--input", required=True, help="CSV file (header row, optional timestamp col)")
    p.add_argument("--has-timestamp", action="store_true")
    p.add_argument("--window", type=int, default=168)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--transform", choices=["dft", "dct"], default="dft")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="floss_out")
    p.set_defaults(func=cmd_detect_period)

    p = sub.add_parser("train", help="train an encoder per an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--scheme", choices=["self_supervised", "pretrain_finetune", "joint"])
    p.add_argument("--out-checkpoint", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="floss_out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a downstream task")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--task", choices=["forecast", "classify", "anomaly"], required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="floss_out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="sweep one knob and tabulate forecasting metrics")
    p.add_argument("--config", required=True)
    p.add_argument("--sweep", choices=["weight", "tau", "transform", "hierarchical"], required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="floss_out")
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FlossError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except jsonschema.ValidationError as exc:
        print(f"internal error: report failed schema validation: {exc.message}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
