#!/usr/bin/env python3
"""Train small encoders under the three schemes and plot their curves.

* self_supervised: frequency loss + masked-timestamp reconstruction.
* pretrain_finetune: the same pretraining, then task-loss fine-tuning.
* joint: supervised forecasting loss with the frequency loss as an
  auxiliary regularizer.

Run from the repo root:  python demos/03_training_schemes.py
(~15 s on a laptop)
"""

import time
from pathlib import Path

from floss import EncoderConfig, FlossConfig, SynthSpec, TrainingConfig, synthesize, train
from floss.plots import save_line_plot

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

data = synthesize(
    SynthSpec(periods=(6.0, 24.0), noise_std=0.3, length=1200, n_series=2, seed=1)
)
encoder_cfg = EncoderConfig(input_features=1, repr_features=16, hidden_width=16,
                            n_blocks=3, seed=0)
floss_cfg = FlossConfig()  # DCT loss, tau=2, hierarchical

for scheme in ("self_supervised", "pretrain_finetune", "joint"):
    cfg = TrainingConfig(
        scheme=scheme,
        epochs=6,
        finetune_epochs=4,
        window_length=96,
        batch_size=2,
        floss_weight=0.5,
        companion_weight=1.0,
        horizon=24,
        seed=0,
    )
    started = time.perf_counter()
    params, report = train(data, cfg, floss_cfg, encoder_cfg=encoder_cfg)
    print(f"{scheme}: {len(report.epoch_total)} epochs in {time.perf_counter()-started:.1f}s, "
          f"final total {report.epoch_total[-1]:.4f}, "
          f"final frequency term {report.epoch_floss[-1]:.4f}, "
          f"skipped batches {report.skipped_batches}")
    save_line_plot(
        OUT / f"curves_{scheme}.svg",
        {
            "frequency loss": report.epoch_floss,
            "companion loss": report.epoch_companion,
            "total": report.epoch_total,
        },
        title=f"Training curves: {scheme}",
        xlabel="epoch",
        ylabel="loss",
    )

print(f"plots written to {OUT}/")
