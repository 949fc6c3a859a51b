"""Flat key=value run configuration.

A run config file holds one ``key = value`` pair per line ('#' starts a
comment). Unknown keys are rejected. Resolution order: built-in defaults,
then the dataset preset (if any), then the file's own keys, then explicit
overrides (command-line flags). Every run writes the fully resolved
configuration, defaults included, next to its outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigurationError
from .linalg import Nonlinearity
from .model import ModelConfig
from .optimize import TrainPlan
from .presets import get_preset


@dataclass
class RunConfig:
    # model
    arch: str = "rnn"
    input_dim: int = 0            # 0: derive from the data
    output_dim: int = 0           # 0: derive from the data
    hidden_dim: int = 100
    transition_inter_dim: int = 0
    output_inter_dim: int = 0
    levels: int = 1
    hidden_nl: str = "sigmoid"
    transition_inter_nl: str = "sigmoid"
    output_inter_nl: str = "sigmoid"
    output_head: str = ""         # "": from preset/data kind
    # data
    preset: str = ""
    data_kind: str = ""           # char | word | pianoroll
    train_path: str = ""
    valid_path: str = ""
    test_path: str = ""
    subseq_len: int = 200
    init_preset: str = ""         # "": from data kind
    # training
    schedule: str = "inverse"
    base_lr: float = 0.1
    tau0: str = "auto"            # "auto" or an update index
    beta: float = 1000.0
    initial_lr: float = 0.5
    significance_threshold: float = 1e-3
    clip_threshold: float = 1.0
    weight_noise_std: float = 0.075
    max_epochs: int = 10
    patience: int = 10
    eval_every: int = 0
    seed: int = 0
    parent: str = ""              # checkpoint to warm-start from
    out_dir: str = "run"


_FIELDS = {f.name: f.type for f in fields(RunConfig)}

# Keys a preset is allowed to default.
_PRESET_KEYS = ("data_kind", "output_head", "init_preset", "schedule", "beta",
                "subseq_len", "weight_noise_std", "clip_threshold",
                "initial_lr", "significance_threshold", "output_inter_nl")


def parse_config_file(path: str) -> dict[str, str]:
    """Raw key -> value strings from a config file; keys must be known."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigurationError(
                    f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
            key, value = (part.strip() for part in stripped.split("=", 1))
            if key not in _FIELDS:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigurationError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = value
    return values


def _convert(key: str, raw: str):
    kind = _FIELDS[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigurationError(f"key {key!r}: cannot parse {raw!r} as {kind}") from None


def resolve_run_config(file_values: dict[str, str],
                       overrides: dict | None = None) -> RunConfig:
    """Defaults <- preset <- file <- overrides, in that order."""
    rc = RunConfig()
    preset_name = file_values.get("preset", "")
    if overrides and "preset" in overrides:
        preset_name = overrides["preset"]
    if preset_name:
        preset = get_preset(preset_name)
        rc.preset = preset.name
        for key in _PRESET_KEYS:
            setattr(rc, key, getattr(preset, key))
    for key, raw in file_values.items():
        if key == "preset":
            continue
        setattr(rc, key, _convert(key, raw))
    for key, value in (overrides or {}).items():
        if key == "preset":
            continue
        if key not in _FIELDS:
            raise ConfigurationError(f"unknown override {key!r}")
        setattr(rc, key, value)
    if not rc.output_head:
        rc.output_head = "bernoulli" if rc.data_kind == "pianoroll" else "softmax"
    if not rc.init_preset and rc.data_kind:
        rc.init_preset = {"pianoroll": "music", "char": "char", "word": "word"}[rc.data_kind]
    return rc


def resolved_text(rc: RunConfig) -> str:
    """The fully resolved configuration, one key per line, field order fixed."""
    lines = [f"{f.name} = {getattr(rc, f.name)}" for f in fields(RunConfig)]
    return "\n".join(lines) + "\n"


def to_model_config(rc: RunConfig, input_dim: int, output_dim: int) -> ModelConfig:
    return ModelConfig(
        architecture=rc.arch,
        input_dim=input_dim,
        output_dim=output_dim,
        hidden_dim=rc.hidden_dim,
        transition_inter_dim=rc.transition_inter_dim,
        output_inter_dim=rc.output_inter_dim,
        levels=rc.levels,
        hidden_nl=Nonlinearity.from_name(rc.hidden_nl),
        transition_inter_nl=Nonlinearity.from_name(rc.transition_inter_nl),
        output_inter_nl=Nonlinearity.from_name(rc.output_inter_nl),
        output_head=rc.output_head,
    )


def to_train_plan(rc: RunConfig) -> TrainPlan:
    if rc.tau0 == "auto":
        tau0 = None
    else:
        try:
            tau0 = int(rc.tau0)
        except ValueError:
            raise ConfigurationError(f"tau0 must be 'auto' or an integer, got {rc.tau0!r}") from None
    return TrainPlan(
        schedule=rc.schedule,
        base_lr=rc.base_lr,
        tau0=tau0,
        beta=rc.beta,
        initial_lr=rc.initial_lr,
        significance_threshold=rc.significance_threshold,
        clip_threshold=rc.clip_threshold,
        weight_noise_std=rc.weight_noise_std,
        max_epochs=rc.max_epochs,
        patience=rc.patience,
        seed=rc.seed,
        eval_every=rc.eval_every,
    )
