"""Minimal portable checkpoint format.

Layout (all integers little-endian):

    bytes 0..3   magic "DRNN"
    u32          format version (currently 1)
    u32          header length in bytes
    ...          header: canonical JSON (model config, lr multipliers,
                 optional vocabulary and extra run metadata)
    u32          tensor count
    per tensor:  u16 name length, name (UTF-8), u8 ndim, u32 per dim,
                 float64 little-endian row-major data

Tensors appear in canonical parameter order, and the JSON header is dumped
with sorted keys, so identical models produce byte-identical files on any
platform.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .data import Vocabulary
from .errors import ConfigurationError
from .linalg import Nonlinearity
from .model import ModelConfig, ParamSet

MAGIC = b"DRNN"
VERSION = 1


def _config_to_dict(config: ModelConfig) -> dict:
    return {
        "architecture": config.architecture,
        "input_dim": config.input_dim,
        "output_dim": config.output_dim,
        "hidden_dim": config.hidden_dim,
        "transition_inter_dim": config.transition_inter_dim,
        "output_inter_dim": config.output_inter_dim,
        "levels": config.levels,
        "hidden_nl": config.hidden_nl.name.lower(),
        "transition_inter_nl": config.transition_inter_nl.name.lower(),
        "output_inter_nl": config.output_inter_nl.name.lower(),
        "output_head": config.output_head,
    }


def _config_from_dict(d: dict) -> ModelConfig:
    return ModelConfig(
        architecture=d["architecture"],
        input_dim=d["input_dim"],
        output_dim=d["output_dim"],
        hidden_dim=d["hidden_dim"],
        transition_inter_dim=d["transition_inter_dim"],
        output_inter_dim=d["output_inter_dim"],
        levels=d["levels"],
        hidden_nl=Nonlinearity.from_name(d["hidden_nl"]),
        transition_inter_nl=Nonlinearity.from_name(d["transition_inter_nl"]),
        output_inter_nl=Nonlinearity.from_name(d["output_inter_nl"]),
        output_head=d["output_head"],
    )


def save_checkpoint(path: str, params: ParamSet, config: ModelConfig,
                    vocab: Vocabulary | None = None,
                    extra: dict | None = None) -> None:
    header = {
        "config": _config_to_dict(config),
        "lr_multipliers": {name: params.lr_multiplier(name) for name in params},
        "vocab": None if vocab is None else {
            "symbols": vocab.symbols, "unknown_index": vocab.unknown_index},
        "extra": extra or {},
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        f.write(struct.pack("<I", len(params.names())))
        for name, arr in params.items():
            name_bytes = name.encode("utf-8")
            f.write(struct.pack("<H", len(name_bytes)))
            f.write(name_bytes)
            f.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                f.write(struct.pack("<I", dim))
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path: str) -> tuple[ParamSet, ModelConfig, Vocabulary | None, dict]:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MAGIC:
        raise ConfigurationError(f"{path} is not a DRNN checkpoint (bad magic)")
    off = 4
    version, = struct.unpack_from("<I", raw, off)
    off += 4
    if version != VERSION:
        raise ConfigurationError(f"unsupported checkpoint version {version}")
    header_len, = struct.unpack_from("<I", raw, off)
    off += 4
    header = json.loads(raw[off:off + header_len].decode("utf-8"))
    off += header_len
    config = _config_from_dict(header["config"])
    n_tensors, = struct.unpack_from("<I", raw, off)
    off += 4
    params = ParamSet()
    for _ in range(n_tensors):
        name_len, = struct.unpack_from("<H", raw, off)
        off += 2
        name = raw[off:off + name_len].decode("utf-8")
        off += name_len
        ndim, = struct.unpack_from("<B", raw, off)
        off += 1
        shape = struct.unpack_from(f"<{ndim}I", raw, off)
        off += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off).reshape(shape)
        off += 8 * count
        params.add(name, arr.astype(np.float64),
                   header["lr_multipliers"].get(name, 1.0))
    vocab = None
    if header.get("vocab"):
        vocab = Vocabulary(header["vocab"]["symbols"], header["vocab"]["unknown_index"])
    return params, config, vocab, header.get("extra", {})
