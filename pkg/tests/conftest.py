import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from deeprnn import ModelConfig, ParamSet, Rng, build


def randomize(params: ParamSet, rng: Rng, std: float = 0.5) -> ParamSet:
    """Fill a parameter skeleton with Gaussian values, in canonical order."""
    for name, arr in params.items():
        params[name] = rng.normal(arr.shape, std)
    return params


def toy_config(arch: str, head: str = "softmax", dim: int = 4, hidden: int = 5,
               **kwargs) -> ModelConfig:
    inter = kwargs.pop("inter", hidden)
    if arch in ("dt", "dts"):
        kwargs.setdefault("transition_inter_dim", inter)
    elif arch in ("dot", "dots"):
        kwargs.setdefault("transition_inter_dim", inter)
        kwargs.setdefault("output_inter_dim", inter)
    elif arch == "srnn":
        kwargs.setdefault("levels", 2)
    return ModelConfig(arch, input_dim=dim, output_dim=dim, hidden_dim=hidden, **kwargs)


def random_model(arch: str, seed: int, head: str = "softmax", dim: int = 4,
                 hidden: int = 5, std: float = 0.5, **kwargs):
    cfg = toy_config(arch, head=head, dim=dim, hidden=hidden, output_head=head, **kwargs)
    params, _ = build(cfg)
    return cfg, randomize(params, Rng(seed), std)


def random_sequences(cfg: ModelConfig, rng: Rng, T: int):
    if cfg.output_head == "softmax":
        inputs = rng.integers(0, cfg.input_dim, T).astype(np.int64)
        targets = rng.integers(0, cfg.output_dim, T).astype(np.int64)
    else:
        inputs = (rng.uniform((T, cfg.input_dim)) < 0.4).astype(np.float64)
        targets = (rng.uniform((T, cfg.output_dim)) < 0.4).astype(np.float64)
    return inputs, targets


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """The ~500KB generated text used by the desk-scale learning tests."""
    from gen_corpus import generate_text

    d = tmp_path_factory.mktemp("corpus")
    text = generate_text(11, 500_000)
    cut = int(len(text) * 0.9)
    (d / "train.txt").write_text(text[:cut], encoding="utf-8")
    (d / "valid.txt").write_text(text[cut:], encoding="utf-8")
    return d
