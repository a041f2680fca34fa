#!/usr/bin/env python3
"""Sweep the frequency-loss weight on a joint forecasting task.

Reproduces the shape of the weight-robustness study at desk scale: the
frequency term is added to the forecasting loss with weights from 0 (pure
baseline) up to 2, and each cell reports held-out MSE with a ridge head
refit on the frozen representations.

Run from the repo root:  python demos/05_weight_ablation.py
(~1-2 min on a laptop; reduce epochs/length to go faster)
"""

import time
from pathlib import Path

from floss.config import ExperimentConfig
from floss.experiments import evaluate_forecast_task, train_encoder
from floss.plots import save_line_plot

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

WEIGHTS = (0.0, 0.1, 0.3, 0.5, 1.0, 2.0)

base = ExperimentConfig.from_dict({
    "data": {"periods": [6.0, 24.0], "noise_std": 0.31622776601683794,
             "length": 2000, "n_series": 4, "seed": 3},
    "encoder": {"repr_features": 32, "hidden_width": 32, "n_blocks": 3},
    "training": {"scheme": "joint", "epochs": 15, "window_length": 96,
                 "batch_size": 2, "companion_weight": 3.0},
    "task": {"horizon": 24},
})

rows = []
for weight in WEIGHTS:
    cfg = base.replace("training", floss_weight=weight)
    started = time.perf_counter()
    params, _ = train_encoder(cfg, seed=0)
    result = evaluate_forecast_task(cfg, params)
    rows.append((weight, result["mse"], result["mae"]))
    print(f"w_f={weight:<4} test MSE {result['mse']:.4f}  MAE {result['mae']:.4f} "
          f"({time.perf_counter()-started:.1f}s)")

best = min(rows, key=lambda r: r[1])
print(f"\nbest weight on this fixture: {best[0]} (MSE {best[1]:.4f}); "
      f"baseline w_f=0 gives {rows[0][1]:.4f}")
save_line_plot(
    OUT / "weight_sweep.svg",
    {"test MSE": [r[1] for r in rows]},
    title=f"Frequency-loss weight sweep {WEIGHTS}",
    xlabel="sweep cell",
    ylabel="MSE",
)
print(f"plot written to {OUT}/")
