"""Command-line interface.

Subcommands:

* ``train``     train a model from a run config; writes checkpoint.drnn,
                trainlog.csv and config.resolved into the output directory
* ``eval``      compute test metrics for a checkpoint on a data split
* ``gradcheck`` compare backprop against central finite differences at toy size
* ``sample``    draw symbols autoregressively from a softmax-head checkpoint
* ``params``    print the exact parameter count table for a config

Exit status: 0 on success, 1 when a check fails or training diverges,
2 for configuration, data or file errors.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import (RunConfig, parse_config_file, resolve_run_config,
                     resolved_text, to_model_config, to_train_plan)
from .data import PITCH_DIMS, load_pianoroll, load_text, iter_subsequences
from .errors import ConfigurationError, DataFormatError, NumericError
from .grad import gradient_check
from .init import init_model, warm_start
from .metrics import evaluate
from .model import (ARCHITECTURES, HiddenState, ModelConfig, build,
                    step_output, step_transition)
from .optimize import sgd_train
from .rng import Rng

GRADCHECK_PARAM_CAP = 5000
GRADCHECK_TOLERANCE = 1e-4


def _require_file(path: str, what: str) -> str:
    if not path:
        raise ConfigurationError(f"{what} is not set")
    if not os.path.exists(path):
        raise ConfigurationError(f"{what} does not exist: {path}")
    return path


def _load_training_data(rc: RunConfig):
    """Returns (train_seqs, valid_seqs, data_dim, vocab)."""
    _require_file(rc.train_path, "train_path")
    _require_file(rc.valid_path, "valid_path")
    if rc.data_kind == "pianoroll":
        return (load_pianoroll(rc.train_path), load_pianoroll(rc.valid_path),
                PITCH_DIMS, None)
    if rc.data_kind in ("char", "word"):
        corpus = load_text(rc.train_path, rc.valid_path, level=rc.data_kind)
        return [corpus.train], [corpus.valid], corpus.vocab.size, corpus.vocab
    raise ConfigurationError(
        f"data_kind must be char, word or pianoroll, got {rc.data_kind!r}")


def cmd_train(args) -> int:
    rc = resolve_run_config(parse_config_file(args.config), _overrides(args))
    train_seqs, valid_seqs, data_dim, vocab = _load_training_data(rc)
    input_dim = rc.input_dim or data_dim
    output_dim = rc.output_dim or data_dim
    if input_dim != data_dim or output_dim != data_dim:
        raise ConfigurationError(
            f"configured dims ({input_dim}, {output_dim}) do not match the "
            f"data dimensionality {data_dim}")
    config = to_model_config(rc, input_dim, output_dim)
    plan = to_train_plan(rc)

    os.makedirs(rc.out_dir, exist_ok=True)
    with open(os.path.join(rc.out_dir, "config.resolved"), "w", encoding="utf-8") as f:
        f.write(resolved_text(rc))

    params = init_model(config, rc.init_preset, Rng(rc.seed))
    if rc.parent:
        _require_file(rc.parent, "parent")
        parent_params, parent_config, _, _ = load_checkpoint(rc.parent)
        params = warm_start(config, params, parent_config, parent_params)

    def train_epoch():
        return iter_subsequences(train_seqs, rc.subseq_len)

    valid_chunks = list(iter_subsequences(valid_seqs, rc.subseq_len))
    csv_path = os.path.join(rc.out_dir, "trainlog.csv")
    try:
        best, log = sgd_train(params, config, train_epoch, valid_chunks, plan)
    except NumericError as err:
        if err.train_log is not None:
            with open(csv_path, "w", encoding="utf-8") as f:
                f.write(err.train_log.to_csv())
        print(f"training diverged: {err}", file=sys.stderr)
        return 1
    with open(csv_path, "w", encoding="utf-8") as f:
        f.write(log.to_csv())
    extra = {"data_kind": rc.data_kind, "preset": rc.preset, "seed": rc.seed,
             "terminal_reason": log.terminal_reason}
    save_checkpoint(os.path.join(rc.out_dir, "checkpoint.drnn"), best, config,
                    vocab=vocab, extra=extra)
    best_rec = log.best_valid()
    print(f"done: {log.terminal_reason}; best valid nll/step "
          f"{best_rec.valid_nll:.6f} at update {best_rec.update}")
    return 0


def _overrides(args) -> dict:
    out = {}
    if getattr(args, "seed", None) is not None:
        out["seed"] = args.seed
    if getattr(args, "out", None):
        out["out_dir"] = args.out
    return out


def cmd_eval(args) -> int:
    params, config, vocab, extra = load_checkpoint(_require_file(args.checkpoint, "checkpoint"))
    kind = args.kind or extra.get("data_kind")
    if not kind:
        raise ConfigurationError("data kind unknown; pass --kind")
    _require_file(args.data, "data path")
    if kind == "pianoroll":
        if config.input_dim != PITCH_DIMS:
            raise ConfigurationError(
                f"checkpoint expects input dim {config.input_dim}, pianoroll data is {PITCH_DIMS}")
        seqs = load_pianoroll(args.data)
    else:
        if vocab is None:
            raise ConfigurationError("checkpoint carries no vocabulary; cannot encode text")
        if config.input_dim != vocab.size:
            raise ConfigurationError(
                f"checkpoint dims ({config.input_dim}) do not match its vocabulary ({vocab.size})")
        with open(args.data, encoding="utf-8") as f:
            text = f.read()
        tokens = list(text) if kind == "char" else text.split()
        seqs = [vocab.encode(tokens)]
    report = evaluate(params, config, seqs, args.subseq_len)
    print(report.to_json() if args.json else report.to_text(), end="")
    return 0


def _gradcheck_config(rc: RunConfig, arch: str) -> ModelConfig:
    ti = rc.transition_inter_dim or rc.hidden_dim
    oi = rc.output_inter_dim or rc.hidden_dim
    return ModelConfig(
        architecture=arch,
        input_dim=rc.input_dim or 4,
        output_dim=rc.output_dim or 4,
        hidden_dim=rc.hidden_dim,
        transition_inter_dim=ti if arch in ("dt", "dts", "dot", "dots") else 0,
        output_inter_dim=oi if arch in ("dot", "dots") else 0,
        levels=max(rc.levels, 2) if arch == "srnn" else 1,
        output_head=rc.output_head or "softmax",
    )


def cmd_gradcheck(args) -> int:
    file_values = parse_config_file(args.config) if args.config else {}
    rc = resolve_run_config(file_values)
    if not file_values:
        rc.hidden_dim = 5
    archs = ARCHITECTURES if args.all_archs else (rc.arch,)
    corrupt = os.environ.get("DRNN_CORRUPT_GRAD") or None
    rng = Rng(rc.seed)
    worst_overall = 0.0
    failed = False
    for arch in archs:
        config = _gradcheck_config(rc, arch)
        params, count = build(config)
        if count > GRADCHECK_PARAM_CAP:
            print(f"{arch}: {count} parameters exceed the gradcheck cap of "
                  f"{GRADCHECK_PARAM_CAP}; finite differences would be too slow",
                  file=sys.stderr)
            return 2
        for name, arr in params.items():
            params[name] = rng.normal(arr.shape, 0.5)
        T = 8
        if config.output_head == "softmax":
            inputs = rng.integers(0, config.input_dim, T).astype(np.int64)
            targets = rng.integers(0, config.output_dim, T).astype(np.int64)
        else:
            inputs = (rng.uniform((T, config.input_dim)) < 0.4).astype(np.float64)
            targets = (rng.uniform((T, config.output_dim)) < 0.4).astype(np.float64)
        errors = gradient_check(params, config, inputs, targets,
                                corrupt_param=corrupt)
        worst = max(errors.values())
        worst_overall = max(worst_overall, worst)
        status = "PASS" if worst < GRADCHECK_TOLERANCE else "FAIL"
        print(f"{arch}: {status} (max relative error {worst:.3e})")
        for name, err in sorted(errors.items()):
            print(f"  {name:8s} {err:.3e}")
        if worst >= GRADCHECK_TOLERANCE:
            failed = True
            bad = max(errors, key=errors.get)
            print(f"  worst parameter: {bad}")
    print(f"overall max relative error: {worst_overall:.3e}")
    return 1 if failed else 0


def cmd_sample(args) -> int:
    params, config, vocab, _ = load_checkpoint(_require_file(args.checkpoint, "checkpoint"))
    if config.output_head != "softmax":
        raise ConfigurationError("sampling needs a softmax-head checkpoint")
    if args.temperature < 0:
        raise ConfigurationError("temperature must be >= 0")
    rng = Rng(args.seed)
    state = HiddenState.zeros(config)
    indices: list[int] = []
    probs = step_output(params, config, state)
    for _ in range(args.length):
        if args.temperature == 0.0:
            nxt = int(np.argmax(probs))
        elif args.temperature == 1.0:
            nxt = rng.categorical(probs)
        else:
            scaled = probs ** (1.0 / args.temperature)
            nxt = rng.categorical(scaled / scaled.sum())
        indices.append(nxt)
        state = step_transition(params, config, np.int64(nxt), state)
        probs = step_output(params, config, state)
    if vocab is not None:
        sep = "" if all(len(s) == 1 for s in vocab.symbols) else " "
        print(sep.join(vocab.decode(indices)))
    else:
        print(" ".join(str(i) for i in indices))
    return 0


def cmd_params(args) -> int:
    rc = resolve_run_config(parse_config_file(args.config))
    input_dim = rc.input_dim or (PITCH_DIMS if rc.data_kind == "pianoroll" else 0)
    output_dim = rc.output_dim or (PITCH_DIMS if rc.data_kind == "pianoroll" else 0)
    if input_dim < 1 or output_dim < 1:
        raise ConfigurationError(
            "params needs explicit input_dim/output_dim (or a pianoroll preset)")
    config = to_model_config(rc, input_dim, output_dim)
    params, count = build(config)
    for name, arr in params.items():
        shape = "x".join(str(d) for d in arr.shape)
        print(f"{name:8s} {shape:>12s} {arr.size:>10d}")
    print(f"{'total':8s} {'':>12s} {count:>10d}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drnn",
                                     description="Deep recurrent sequence model trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a run config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, help="override the output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a data split")
    p.add_argument("checkpoint")
    p.add_argument("--data", required=True, help="path to one split file")
    p.add_argument("--kind", choices=["char", "word", "pianoroll"], default=None)
    p.add_argument("--subseq-len", type=int, default=200)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="verify backprop against finite differences")
    p.add_argument("--config", default=None)
    p.add_argument("--all-archs", action="store_true",
                   help="check every architecture kind at the config's toy dims")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("sample", help="sample symbols from a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--length", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--temperature", type=float, default=1.0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("params", help="print the parameter count table")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_params)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, DataFormatError, FileNotFoundError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except NumericError as err:
        print(f"numeric error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
