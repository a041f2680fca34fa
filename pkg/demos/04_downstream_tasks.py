#!/usr/bin/env python3
"""Run the three downstream tasks end to end on synthetic fixtures.

Forecasting fits a closed-form ridge head on frozen representations;
classification pools instance representations over time and fits an
RBF-kernel ridge; anomaly detection scores each streaming window by the
dissimilarity between its representation and the same window with the
last point masked.

Run from the repo root:  python demos/04_downstream_tasks.py
(~20 s on a laptop)
"""

from floss.config import ExperimentConfig
from floss.experiments import (
    evaluate_anomaly_task,
    evaluate_classify_task,
    evaluate_forecast_task,
    train_encoder,
)

SMALL_ENCODER = {"repr_features": 16, "hidden_width": 16, "n_blocks": 3}

# --- forecasting -----------------------------------------------------------
forecast_cfg = ExperimentConfig.from_dict({
    "data": {"periods": [6.0, 24.0], "noise_std": 0.3, "length": 1500, "seed": 1},
    "encoder": SMALL_ENCODER,
    "training": {"scheme": "joint", "epochs": 8, "window_length": 96,
                 "batch_size": 2, "floss_weight": 0.5, "companion_weight": 3.0},
    "task": {"horizon": 24},
})
params, _ = train_encoder(forecast_cfg, seed=0)
forecast = evaluate_forecast_task(forecast_cfg, params)
print(f"forecast: test MSE {forecast['mse']:.4f}, MAE {forecast['mae']:.4f}, "
      f"ridge alpha {forecast['ridge_alpha']}, detected period {forecast['detected_period']}")

# --- classification ---------------------------------------------------------
classify_cfg = ExperimentConfig.from_dict({
    "data": {"source": "synthetic_classify", "class_periods": [6.0, 24.0],
             "instances_per_class": 16, "instance_length": 96,
             "noise_std": 0.2, "seed": 2},
    "encoder": SMALL_ENCODER,
    "training": {"epochs": 4, "window_length": 48, "batch_size": 1},
})
params, _ = train_encoder(classify_cfg, seed=0)
classify = evaluate_classify_task(classify_cfg, params)
print(f"classify: accuracy {classify['accuracy']:.2f}, "
      f"macro F1 {classify['macro_f1']:.2f} on {classify['n_test']} held-out instances")

# --- anomaly detection -------------------------------------------------------
anomaly_cfg = ExperimentConfig.from_dict({
    "data": {"periods": [24.0], "noise_std": 0.1, "length": 800, "seed": 3,
             "anomaly_spikes": 8, "spike_sigma": 10.0},
    "encoder": SMALL_ENCODER,
    "training": {"epochs": 3, "window_length": 64, "batch_size": 1},
    "task": {"anomaly_ratio": 8 / 400, "anomaly_context": 48},
})
params, _ = train_encoder(anomaly_cfg, seed=0)
anomaly = evaluate_anomaly_task(anomaly_cfg, params)
print(f"anomaly: precision {anomaly['precision']:.2f}, recall {anomaly['recall']:.2f}, "
      f"F1 {anomaly['f1']:.2f} at threshold {anomaly['threshold']:.4f}")
