import json
import re

import numpy as np
import jsonschema
import pytest

from floss.cli import _schema, main
from floss.config import DEFAULTS, ExperimentConfig
from floss.errors import BadConfig
from floss.timeseries import SynthSpec, TimeSeriesTensor, synthesize, write_csv

FAST_SECTIONS = """
[encoder]
repr_features = 8
hidden_width = 8
n_blocks = 2

[training]
scheme = "joint"
epochs = 2
window_length = 48
batch_size = 1
floss_weight = 0.5

[task]
horizon = 8
"""


@pytest.fixture()
def forecast_config(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text(
        "[data]\nperiods = [6.0, 24.0]\nnoise_std = 0.3\nlength = 400\nseed = 1\n"
        + FAST_SECTIONS,
        encoding="utf-8",
    )
    return path


def read_report(out_dir):
    return json.loads((out_dir / "report.json").read_text(encoding="utf-8"))


def report_without_walltime(out_dir):
    text = (out_dir / "report.json").read_text(encoding="utf-8")
    return re.sub(r'^\s*"wall_time_s": [^,\n]+,?\n', "", text, flags=re.M)


class TestDetectPeriod:
    def test_synthetic_daily_fixture(self, tmp_path):
        # 1920 = 80 * 24: the full-series window is an exact multiple of 24
        t = synthesize(SynthSpec(periods=(24.0,), length=1920, noise_std=0.05, seed=2))
        csv_path = tmp_path / "daily.csv"
        write_csv(t, csv_path)
        out = tmp_path / "out"
        rc = main(["detect-period", "--input", str(csv_path), "--window", "96",
                   "--samples", "25", "--seed", "1", "--out", str(out)])
        assert rc == 0
        report = read_report(out)
        assert report["period"] == 24.0
        assert report["histogram"] == {"24": 25}
        assert (out / "period_histogram.svg").exists()

    def test_constant_input_reports_null(self, tmp_path):
        t = TimeSeriesTensor(np.full((1, 300, 1), 7.0))
        csv_path = tmp_path / "const.csv"
        write_csv(t, csv_path)
        out = tmp_path / "out"
        rc = main(["detect-period", "--input", str(csv_path), "--window", "64",
                   "--samples", "10", "--seed", "0", "--out", str(out)])
        assert rc == 0
        report = read_report(out)
        assert report["period"] is None
        assert report["histogram"] == {"none": 10}

    def test_missing_input_is_user_error(self, tmp_path, capsys):
        rc = main(["detect-period", "--input", str(tmp_path / "nope.csv"),
                   "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "error" in capsys.readouterr().err


class TestTrainCommand:
    def test_report_and_checkpoint(self, forecast_config, tmp_path):
        out = tmp_path / "run"
        rc = main(["train", "--config", str(forecast_config), "--seed", "5",
                   "--out", str(out)])
        assert rc == 0
        report = read_report(out)
        assert report["scheme"] == "joint"
        assert report["epochs_recorded"] == 2
        assert (out / "checkpoint.json").exists()
        assert (out / "loss_curves.svg").exists()
        jsonschema.validate(report, _schema())

    def test_scheme_override(self, forecast_config, tmp_path):
        out = tmp_path / "run"
        rc = main(["train", "--config", str(forecast_config), "--scheme",
                   "self_supervised", "--seed", "5", "--out", str(out)])
        assert rc == 0
        assert read_report(out)["scheme"] == "self_supervised"

    def test_missing_config_exits_2(self, tmp_path, capsys):
        rc = main(["train", "--config", str(tmp_path / "none.toml"), "--out", str(tmp_path / "o")])
        assert rc == 2
        assert capsys.readouterr().err.startswith("error")

    def test_unknown_config_key_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("[training]\nlr = 0.1\n", encoding="utf-8")
        rc = main(["train", "--config", str(bad), "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "unknown key" in capsys.readouterr().err


class TestEvaluateCommand:
    def _train(self, config, out):
        rc = main(["train", "--config", str(config), "--seed", "5", "--out", str(out)])
        assert rc == 0
        return out / "checkpoint.json"

    def test_forecast_metrics(self, forecast_config, tmp_path):
        ckpt = self._train(forecast_config, tmp_path / "t")
        out = tmp_path / "e"
        rc = main(["evaluate", "--checkpoint", str(ckpt), "--task", "forecast",
                   "--config", str(forecast_config), "--seed", "5", "--out", str(out)])
        assert rc == 0
        report = read_report(out)
        assert report["task"] == "forecast"
        assert report["mse"] is not None and report["mse"] >= 0
        assert report["accuracy"] is None
        assert (out / "forecast_sample.svg").exists()
        jsonschema.validate(report, _schema())

    def test_forecast_on_noiseless_periodic_fixture_is_tight(self, tmp_path):
        # Noiseless period-6 input cycles through 6 representation states, so
        # the future is an exactly linear readout and ridge MSE collapses.
        cfg = tmp_path / "clean.toml"
        cfg.write_text(
            "[data]\nperiods = [6.0]\nnoise_std = 0.0\nlength = 480\nseed = 1\n"
            "[encoder]\nrepr_features = 16\nhidden_width = 16\nn_blocks = 2\n"
            "[training]\nscheme = \"joint\"\nepochs = 10\nwindow_length = 48\n"
            "batch_size = 2\nfloss_weight = 0.5\n"
            "[task]\nhorizon = 8\n",
            encoding="utf-8",
        )
        ckpt = self._train(cfg, tmp_path / "t")
        out = tmp_path / "e"
        rc = main(["evaluate", "--checkpoint", str(ckpt), "--task", "forecast",
                   "--config", str(cfg), "--seed", "5", "--out", str(out)])
        assert rc == 0
        assert read_report(out)["mse"] < 1e-4

    def test_classify_two_period_fixture(self, tmp_path):
        cfg = tmp_path / "clf.toml"
        cfg.write_text(
            "[data]\nsource = \"synthetic_classify\"\nclass_periods = [6.0, 24.0]\n"
            "instances_per_class = 12\ninstance_length = 96\nnoise_std = 0.2\nseed = 2\n"
            "[encoder]\nrepr_features = 8\nhidden_width = 8\nn_blocks = 2\n"
            "[training]\nepochs = 2\nwindow_length = 48\nbatch_size = 1\n",
            encoding="utf-8",
        )
        ckpt = self._train(cfg, tmp_path / "t")
        out = tmp_path / "e"
        rc = main(["evaluate", "--checkpoint", str(ckpt), "--task", "classify",
                   "--config", str(cfg), "--seed", "5", "--out", str(out)])
        assert rc == 0
        report = read_report(out)
        assert report["accuracy"] >= 0.95
        assert report["macro_f1"] is not None

    def test_classify_from_label_manifest(self, tmp_path):
        rows = []
        for cls, period in ((0, 6.0), (1, 24.0)):
            for i in range(4):
                t = synthesize(SynthSpec(periods=(period,), phases=(0.7 * i,),
                                         noise_std=0.1, length=72, seed=cls * 10 + i))
                name = f"inst_{cls}_{i}.csv"
                write_csv(t, tmp_path / name)
                rows.append(f"{name},{cls}")
        (tmp_path / "labels.csv").write_text("file,label\n" + "\n".join(rows) + "\n",
                                             encoding="utf-8")
        cfg = tmp_path / "clf.toml"
        cfg.write_text(
            "[data]\nlabel_manifest = \"labels.csv\"\n"
            "[encoder]\nrepr_features = 8\nhidden_width = 8\nn_blocks = 2\n"
            "[training]\nepochs = 2\nwindow_length = 48\nbatch_size = 1\n",
            encoding="utf-8",
        )
        ckpt = self._train(cfg, tmp_path / "t")
        out = tmp_path / "e"
        rc = main(["evaluate", "--checkpoint", str(ckpt), "--task", "classify",
                   "--config", str(cfg), "--seed", "5", "--out", str(out)])
        assert rc == 0
        report = read_report(out)
        assert report["accuracy"] is not None and 0.0 <= report["accuracy"] <= 1.0

    def test_anomaly_spike_fixture(self, tmp_path):
        cfg = tmp_path / "ano.toml"
        cfg.write_text(
            "[data]\nperiods = [24.0]\nnoise_std = 0.1\nlength = 800\nseed = 3\n"
            "anomaly_spikes = 8\nspike_sigma = 10.0\n"
            "[encoder]\nrepr_features = 8\nhidden_width = 8\nn_blocks = 2\n"
            "[training]\nepochs = 2\nwindow_length = 64\nbatch_size = 1\n"
            "[task]\nanomaly_ratio = 0.02\nanomaly_context = 48\n",
            encoding="utf-8",
        )
        ckpt = self._train(cfg, tmp_path / "t")
        out = tmp_path / "e"
        rc = main(["evaluate", "--checkpoint", str(ckpt), "--task", "anomaly",
                   "--config", str(cfg), "--seed", "5", "--out", str(out)])
        assert rc == 0
        report = read_report(out)
        assert report["f1"] >= 0.8
        assert (out / "anomaly_scores.svg").exists()

    def test_missing_checkpoint_exits_2(self, forecast_config, tmp_path):
        rc = main(["evaluate", "--checkpoint", str(tmp_path / "no.json"),
                   "--task", "forecast", "--config", str(forecast_config),
                   "--out", str(tmp_path / "o")])
        assert rc == 2


class TestAblateCommand:
    @pytest.mark.parametrize(
        "sweep,expected_rows",
        [("weight", 6), ("transform", 3), ("hierarchical", 2), ("tau", 4)],
    )
    def test_row_counts(self, forecast_config, tmp_path, sweep, expected_rows):
        out = tmp_path / f"ab_{sweep}"
        rc = main(["ablate", "--config", str(forecast_config), "--sweep", sweep,
                   "--seed", "3", "--out", str(out)])
        assert rc == 0
        report = read_report(out)
        assert len(report["rows"]) == expected_rows
        table = (out / "table.csv").read_text(encoding="utf-8")
        assert len(table.strip().splitlines()) == expected_rows + 1
        assert (out / "sweep_mse.svg").exists()

    def test_weight_sweep_grid(self, forecast_config, tmp_path):
        out = tmp_path / "ab"
        rc = main(["ablate", "--config", str(forecast_config), "--sweep", "weight",
                   "--seed", "3", "--out", str(out)])
        assert rc == 0
        weights = [row["floss_weight"] for row in read_report(out)["rows"]]
        assert weights == [0.0, 0.1, 0.3, 0.5, 1.0, 2.0]

    def test_transform_sweep_labels(self, forecast_config, tmp_path):
        out = tmp_path / "ab"
        rc = main(["ablate", "--config", str(forecast_config), "--sweep", "transform",
                   "--seed", "3", "--out", str(out)])
        assert rc == 0
        labels = [row["label"] for row in read_report(out)["rows"]]
        assert labels == ["fft_detect+fft_loss", "fft_detect+dct_loss", "dct_detect+fft_loss"]


class TestDeterminism:
    def test_train_reports_byte_identical(self, forecast_config, tmp_path):
        texts = []
        for name in ("a", "b"):
            out = tmp_path / name
            rc = main(["train", "--config", str(forecast_config), "--seed", "9",
                       "--out", str(out), "--out-checkpoint", str(out / "ck.json")])
            assert rc == 0
            text = report_without_walltime(out)
            texts.append(text.replace(str(out), "OUT"))
        assert texts[0] == texts[1]

    def test_detect_period_byte_identical(self, tmp_path):
        t = synthesize(SynthSpec(periods=(12.0,), length=600, noise_std=0.2, seed=4))
        csv_path = tmp_path / "s.csv"
        write_csv(t, csv_path)
        texts = []
        for name in ("a", "b"):
            out = tmp_path / name
            rc = main(["detect-period", "--input", str(csv_path), "--window", "96",
                       "--samples", "15", "--seed", "2", "--out", str(out)])
            assert rc == 0
            texts.append(report_without_walltime(out))
        assert texts[0] == texts[1]

    def test_env_seed_fallback(self, tmp_path, monkeypatch):
        t = synthesize(SynthSpec(periods=(12.0,), length=600, noise_std=0.2, seed=4))
        csv_path = tmp_path / "s.csv"
        write_csv(t, csv_path)
        monkeypatch.setenv("FLOSS_SEED", "77")
        out = tmp_path / "o"
        rc = main(["detect-period", "--input", str(csv_path), "--window", "96",
                   "--samples", "5", "--out", str(out)])
        assert rc == 0
        assert read_report(out)["seed"] == 77


class TestConfig:
    def test_defaults_round_trip(self):
        cfg = ExperimentConfig.from_dict({})
        echo = cfg.as_dict()
        assert set(echo) == set(DEFAULTS)
        for section, values in DEFAULTS.items():
            assert set(echo[section]) == set(values)

    def test_unknown_section_rejected(self):
        with pytest.raises(BadConfig):
            ExperimentConfig.from_dict({"model": {}})

    def test_type_checking(self):
        with pytest.raises(BadConfig):
            ExperimentConfig.from_dict({"training": {"epochs": "ten"}})
        with pytest.raises(BadConfig):
            ExperimentConfig.from_dict({"floss": {"hierarchical": 1}})

    def test_echo_is_byte_stable(self):
        cfg = ExperimentConfig.from_dict({"training": {"epochs": 3}})
        a = json.dumps(cfg.as_dict(), sort_keys=True)
        b = json.dumps(ExperimentConfig.from_dict({"training": {"epochs": 3}}).as_dict(), sort_keys=True)
        assert a == b

    def test_replace_produces_new_config(self):
        cfg = ExperimentConfig.from_dict({})
        other = cfg.replace("training", floss_weight=2.0)
        assert other.training["floss_weight"] == 2.0
        assert cfg.training["floss_weight"] == 1.0
