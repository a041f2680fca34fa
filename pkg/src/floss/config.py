"""Experiment configuration files: TOML with fully defaulted sections.

Sections are ``[data]``, ``[encoder]``, ``[floss]``, ``[training]`` and
``[task]``. Unknown sections or keys are rejected so typos fail loudly.
The parsed config echoes back through :meth:`ExperimentConfig.as_dict`
with sorted keys, making report embedding byte-stable across runs.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .encoder import EncoderConfig
from .errors import BadConfig
from .loss import FlossConfig
from .spectral import SpectralTransform
from .timeseries import SplitSpec, SynthSpec, TimeSeriesTensor, load_csv, synthesize
from .training import TrainingConfig

DEFAULTS = {
    "data": {
        "source": "synthetic",      # synthetic | csv | synthetic_classify
        "csv_path": "",
        "has_timestamp": False,
        "label_manifest": "",
        "label_column": "",         # csv anomaly labels (0/1 column name)
        "periods": [24.0],
        "amplitudes": [1.0],
        "phases": [0.0],
        "noise_std": 0.1,
        "trend_slope": 0.0,
        "length": 1000,
        "n_series": 1,
        "n_features": 1,
        "seed": 0,
        "train_fraction": 0.7,
        "val_fraction": 0.1,
        "test_fraction": 0.2,
        "class_periods": [6.0, 24.0],
        "instances_per_class": 20,
        "instance_length": 192,
        "anomaly_spikes": 0,
        "spike_sigma": 10.0,
    },
    "encoder": {
        "repr_features": 64,
        "hidden_width": 64,
        "n_blocks": 4,
        "kernel_width": 3,
    },
    "floss": {
        "transform": "dct",
        "pooling_scale": 2,
        "hierarchical": True,
        "include_length_one_level": True,
        "normalize_by_bins": False,
        "detection_transform": "dft",
    },
    "training": {
        "scheme": "self_supervised",
        "floss_weight": 1.0,
        "companion_weight": 1.0,
        "batch_size": 4,
        "window_length": 96,
        "epochs": 10,
        "learning_rate": 1e-3,
        "seed": 0,
        "mask_ratio": 0.4,
        "steps_per_epoch": 0,
        "wide_window_length": 0,
        "finetune_epochs": 0,
        "freeze_period": False,
    },
    "task": {
        "name": "forecast",         # forecast | classify | anomaly
        "horizon": 24,
        "ridge_alphas": [0.1, 1.0, 10.0, 100.0],
        "anomaly_ratio": 0.01,
        "anomaly_context": 64,
        "anomaly_metric": "l1",
    },
}


def _merge_section(section: str, defaults: dict, overrides: dict) -> dict:
    merged = copy.deepcopy(defaults)
    for key, value in overrides.items():
        if key not in defaults:
            raise BadConfig(f"unknown key [{section}].{key}")
        default = defaults[key]
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise BadConfig(f"[{section}].{key} must be a boolean")
        elif isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        elif isinstance(default, int) and not isinstance(value, int):
            raise BadConfig(f"[{section}].{key} must be an integer")
        elif isinstance(default, str) and not isinstance(value, str):
            raise BadConfig(f"[{section}].{key} must be a string")
        elif isinstance(default, list) and not isinstance(value, list):
            raise BadConfig(f"[{section}].{key} must be a list")
        merged[key] = value
    return merged


@dataclass
class ExperimentConfig:
    data: dict
    encoder: dict
    floss: dict
    training: dict
    task: dict
    base_dir: Path = Path(".")

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path = Path(".")) -> "ExperimentConfig":
        unknown = set(raw) - set(DEFAULTS)
        if unknown:
            raise BadConfig(f"unknown section(s): {sorted(unknown)}")
        sections = {
            name: _merge_section(name, DEFAULTS[name], raw.get(name, {}))
            for name in DEFAULTS
        }
        return cls(base_dir=base_dir, **sections)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise BadConfig(f"{path}: {exc}") from None
        return cls.from_dict(raw, base_dir=path.parent)

    def as_dict(self) -> dict:
        """Canonical echo of every field (including defaults), sorted keys."""
        return {
            section: dict(sorted(getattr(self, section).items()))
            for section in sorted(DEFAULTS)
        }

    # --- typed views -------------------------------------------------

    def synth_spec(self) -> SynthSpec:
        d = self.data
        k = len(d["periods"])

        def broadcast(values):
            # a single value applies to every component
            return tuple(values) * k if len(values) == 1 and k > 1 else tuple(values)

        return SynthSpec(
            periods=tuple(d["periods"]),
            amplitudes=broadcast(d["amplitudes"]),
            phases=broadcast(d["phases"]),
            noise_std=d["noise_std"],
            trend_slope=d["trend_slope"],
            length=d["length"],
            n_series=d["n_series"],
            n_features=d["n_features"],
            seed=d["seed"],
        )

    def load_tensor(self) -> TimeSeriesTensor:
        if self.data["source"] == "csv":
            if not self.data["csv_path"]:
                raise BadConfig("[data].csv_path required when source = 'csv'")
            return load_csv(
                self.base_dir / self.data["csv_path"],
                has_timestamp=self.data["has_timestamp"],
            )
        if self.data["source"] == "synthetic":
            return synthesize(self.synth_spec())
        raise BadConfig(f"[data].source {self.data['source']!r} does not provide a tensor")

    def split_spec(self) -> SplitSpec:
        return SplitSpec(
            train_fraction=self.data["train_fraction"],
            val_fraction=self.data["val_fraction"],
            test_fraction=self.data["test_fraction"],
        )

    def encoder_config(self, input_features: int, seed: int) -> EncoderConfig:
        return EncoderConfig(input_features=input_features, seed=seed, **self.encoder)

    def floss_config(self) -> FlossConfig:
        f = self.floss
        return FlossConfig(
            transform=SpectralTransform.parse(f["transform"]),
            pooling_scale=f["pooling_scale"],
            hierarchical=f["hierarchical"],
            include_length_one_level=f["include_length_one_level"],
            normalize_by_bins=f["normalize_by_bins"],
        )

    def detection_transform(self) -> SpectralTransform:
        return SpectralTransform.parse(self.floss["detection_transform"])

    def training_config(self, scheme: str | None = None, seed: int | None = None) -> TrainingConfig:
        t = self.training
        return TrainingConfig(
            scheme=scheme or t["scheme"],
            floss_weight=t["floss_weight"],
            companion_weight=t["companion_weight"],
            batch_size=t["batch_size"],
            window_length=t["window_length"],
            epochs=t["epochs"],
            learning_rate=t["learning_rate"],
            seed=t["seed"] if seed is None else seed,
            mask_ratio=t["mask_ratio"],
            horizon=self.task["horizon"],
            steps_per_epoch=t["steps_per_epoch"],
            wide_window_length=t["wide_window_length"],
            finetune_epochs=t["finetune_epochs"],
            freeze_period=t["freeze_period"],
        )

    def replace(self, section: str, **updates) -> "ExperimentConfig":
        """New config with some keys of one section replaced (sweeps)."""
        raw = {name: dict(getattr(self, name)) for name in DEFAULTS}
        for key, value in updates.items():
            if key not in raw[section]:
                raise BadConfig(f"unknown key [{section}].{key}")
            raw[section][key] = value
        return ExperimentConfig.from_dict(raw, base_dir=self.base_dir)
