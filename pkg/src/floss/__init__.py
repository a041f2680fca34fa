"""Frequency-domain regularization for periodic time-series representation learning.

The pipeline: detect the dominant period of a batch from its averaged
periodogram, build a periodically shifted view of each training window,
encode both views with a dilated causal convolutional encoder, and
penalize the L1 distance between the spectral densities of the two
representations, hierarchically across max-pooled temporal resolutions.
Downstream heads (ridge forecasting, RBF-kernel classification,
masked-last-point anomaly scoring) consume the learned representations.
"""

from .encoder import (
    EncoderConfig,
    EncoderParams,
    backward,
    encode,
    init_encoder,
    load_checkpoint,
    save_checkpoint,
)
from .errors import FlossError
from .loss import FlossConfig, LossReport, floss_flat, floss_hierarchical, maxpool_time
from .periodicity import PeriodEstimate, average_periodogram, detect_period, period_histogram
from .spectral import (
    Periodogram,
    SpectralTransform,
    batch_periodogram,
    periodogram_dct,
    periodogram_dft,
)
from .timeseries import (
    SplitSpec,
    SynthSpec,
    TimeSeriesTensor,
    Window,
    chronological_split,
    load_csv,
    synthesize,
    write_csv,
    zscore_normalize,
)
from .training import TrainingConfig, TrainReport, train
from .views import MaskSpec, ViewPair, apply_mask, sample_view_pair

__version__ = "0.1.0"

__all__ = [
    "EncoderConfig",
    "EncoderParams",
    "FlossConfig",
    "FlossError",
    "LossReport",
    "MaskSpec",
    "PeriodEstimate",
    "Periodogram",
    "SpectralTransform",
    "SplitSpec",
    "SynthSpec",
    "TimeSeriesTensor",
    "TrainReport",
    "TrainingConfig",
    "ViewPair",
    "Window",
    "apply_mask",
    "average_periodogram",
    "backward",
    "batch_periodogram",
    "chronological_split",
    "detect_period",
    "encode",
    "floss_flat",
    "floss_hierarchical",
    "init_encoder",
    "load_csv",
    "load_checkpoint",
    "maxpool_time",
    "period_histogram",
    "periodogram_dct",
    "periodogram_dft",
    "sample_view_pair",
    "save_checkpoint",
    "synthesize",
    "train",
    "write_csv",
    "zscore_normalize",
]
