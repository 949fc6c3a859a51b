"""Per-dataset hyperparameter presets.

Each preset bundles the full training recipe for one benchmark dataset:
initialization standard deviations (via the init preset), subsequence length,
learning-rate schedule and its constants, gradient clipping cutoff, and
weight-noise level. Presets only provide defaults; any run-config key can
override them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError


@dataclass(frozen=True)
class DatasetPreset:
    name: str
    data_kind: str              # char | word | pianoroll
    output_head: str            # softmax | bernoulli
    init_preset: str            # music | char | word
    schedule: str               # inverse | halving
    beta: float
    subseq_len: int
    weight_noise_std: float
    clip_threshold: float = 1.0
    initial_lr: float = 0.5
    significance_threshold: float = 1e-3
    output_inter_nl: str = "sigmoid"


PRESETS: dict[str, DatasetPreset] = {p.name: p for p in [
    DatasetPreset(name="nottingham", data_kind="pianoroll", output_head="bernoulli",
                  init_preset="music", schedule="inverse", beta=2330.0,
                  subseq_len=200, weight_noise_std=0.075),
    DatasetPreset(name="jsb", data_kind="pianoroll", output_head="bernoulli",
                  init_preset="music", schedule="inverse", beta=100.0,
                  subseq_len=50, weight_noise_std=0.075),
    DatasetPreset(name="musedata", data_kind="pianoroll", output_head="bernoulli",
                  init_preset="music", schedule="inverse", beta=1475.0,
                  subseq_len=200, weight_noise_std=0.075),
    DatasetPreset(name="char", data_kind="char", output_head="softmax",
                  init_preset="char", schedule="halving", beta=1000.0,
                  subseq_len=200, weight_noise_std=0.0,
                  output_inter_nl="rectifier"),
    DatasetPreset(name="word", data_kind="word", output_head="softmax",
                  init_preset="word", schedule="halving", beta=1000.0,
                  subseq_len=200, weight_noise_std=0.075),
]}


def get_preset(name: str) -> DatasetPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown preset {name!r}; expected one of {sorted(PRESETS)}") from None
