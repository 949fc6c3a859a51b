"""Parameter initialization and warm-start pretraining transfer.

Matrices between hidden-typed activations (recurrent, inter-hidden and
hidden-shortcut connections) are sparse, with a fixed number of nonzero
incoming connections per unit, then rescaled to unit largest singular value.
Matrices touching the input or the output are dense Gaussians whose standard
deviations come from per-dataset presets. Biases start at zero, except biases
feeding rectifier layers, which start at 0.1.

``warm_start`` copies a trained shallower model's transition parameters into a
deeper model (conventional -> stacked, deep-transition -> deep-output) and
marks the copied tensors with a ten-times-smaller learning-rate multiplier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .linalg import Nonlinearity, largest_singular_value
from .model import (ModelConfig, ParamSet, bias_nonlinearity, build,
                    param_roles, transition_param_names)
from .rng import Rng

SPARSE_CONNECTIONS_PER_UNIT = 20
WARM_START_LR_MULTIPLIER = 0.1
RECTIFIER_BIAS = 0.1


@dataclass(frozen=True)
class InitPreset:
    """Gaussian standard deviations for the dense (non-sparse) matrices."""

    input_std: float        # connections from the input layer
    output_std: float       # connections into the output layer
    output_inter_std: float  # hidden state -> deep-output intermediate layer


INIT_PRESETS: dict[str, InitPreset] = {
    "music": InitPreset(input_std=0.1, output_std=0.01, output_inter_std=0.01),
    "char": InitPreset(input_std=0.01, output_std=0.001, output_inter_std=0.01),
    "word": InitPreset(input_std=0.1, output_std=0.1, output_inter_std=0.01),
}


def sparse_init(rng: Rng, rows: int, cols: int, nnz_per_unit: int,
                std: float) -> np.ndarray:
    """(rows x cols) matrix with min(nnz_per_unit, rows) Gaussian nonzeros per column.

    Columns are output units (fan_in x fan_out storage); nonzero positions are
    uniform without replacement, values are N(0, std^2).
    """
    if nnz_per_unit < 1:
        raise ConfigurationError(f"nnz_per_unit must be >= 1, got {nnz_per_unit}")
    nnz = min(nnz_per_unit, rows)
    M = np.zeros((rows, cols))
    for j in range(cols):
        positions = rng.choice_without_replacement(rows, nnz)
        M[positions, j] = rng.normal(nnz, std)
    return M


def rescale_to_unit_spectral(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Divide by the largest singular value so that sigma_max(result) == 1."""
    sigma = largest_singular_value(M, tol=1e-8, name=name)
    return M / sigma


def init_model(config: ModelConfig, preset: str | InitPreset, rng: Rng) -> ParamSet:
    """Fully initialized parameters for a dataset preset (music, char, word).

    Parameters are drawn in canonical build order, so a fixed rng seed fully
    determines the result.
    """
    if isinstance(preset, str):
        if preset not in INIT_PRESETS:
            raise ConfigurationError(
                f"unknown init preset {preset!r}; expected one of {sorted(INIT_PRESETS)}")
        preset = INIT_PRESETS[preset]
    params, _ = build(config)
    roles = param_roles(config)
    for name, arr in params.items():
        role = roles[name]
        if role == "recurrent":
            M = sparse_init(rng, arr.shape[0], arr.shape[1],
                            SPARSE_CONNECTIONS_PER_UNIT, std=1.0)
            params[name] = rescale_to_unit_spectral(M, name=name)
        elif role == "input":
            params[name] = rng.normal(arr.shape, preset.input_std)
        elif role == "output":
            params[name] = rng.normal(arr.shape, preset.output_std)
        elif role == "output_inter":
            params[name] = rng.normal(arr.shape, preset.output_inter_std)
        else:  # bias
            nl = bias_nonlinearity(config, name)
            if nl is Nonlinearity.RECTIFIER:
                params[name] = np.full(arr.shape, RECTIFIER_BIAS)
            else:
                params[name] = np.zeros(arr.shape)
    return params


_WARM_START_PARENTS = {"srnn": "rnn", "dots": "dts"}


def warm_start(child_config: ModelConfig, child_params: ParamSet,
               parent_config: ModelConfig, parent_params: ParamSet) -> ParamSet:
    """Copy the parent's transition parameters into a freshly built deeper model.

    Only the designated parent pairs are accepted: a stacked model warm-starts
    from a conventional one (level 1 takes the parent's transition), and a
    deep-output model from the deep-transition model with shortcuts (the whole
    transition stack carries over). Copied tensors keep the parent's values
    bit-for-bit and get learning-rate multiplier 0.1; everything else keeps
    its fresh initialization and multiplier 1.0.
    """
    expected = _WARM_START_PARENTS.get(child_config.architecture)
    if expected is None or parent_config.architecture != expected:
        raise ConfigurationError(
            f"warm start into {child_config.architecture!r} requires a "
            f"{expected!r} parent, got {parent_config.architecture!r}")
    out = child_params.copy()
    for name in transition_param_names(child_config):
        if name not in parent_params:
            continue
        src = parent_params[name]
        if src.shape != out[name].shape:
            raise ConfigurationError(
                f"warm start shape mismatch for {name!r}: parent {src.shape}, "
                f"child {out[name].shape}")
        out[name] = src.copy()
        out.set_lr_multiplier(name, WARM_START_LR_MULTIPLIER)
    return out
