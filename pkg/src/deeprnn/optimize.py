"""SGD training loop: learning-rate schedules, weight noise, early stopping.

One update processes one subsequence: optionally perturb the weights with
fresh Gaussian noise, backpropagate at the perturbed point, clip the global
gradient norm, then step the clean parameters with per-parameter learning-rate
multipliers. The hidden state carries across subsequences except where the
data marks a sequence start.

Two schedules are supported. The inverse schedule multiplies a base rate by
1 / (1 + max(0, tau - tau0) / beta); when tau0 is left unset it is fixed
automatically at the update count where validation loss first increases. The
halving schedule halves the rate at every validation that fails to improve
the previous one by at least a significance threshold.

Training stops after a patience-worth of validations without a new best, or
at the epoch cap; the parameters returned are the best-validation snapshot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .data import SubseqChunk
from .errors import ConfigurationError, NumericError
from .grad import bptt, clip_gradients
from .model import HiddenState, ModelConfig, ParamSet, forward
from .rng import Rng

# Substream namespace for per-update weight-noise draws.
_NOISE_STREAM_BASE = 1 << 40


@dataclass
class TrainPlan:
    schedule: str = "inverse"              # "inverse" | "halving"
    base_lr: float = 0.1                   # scales the inverse-schedule formula
    tau0: int | None = None                # None: set when validation first worsens
    beta: float = 1000.0
    initial_lr: float = 0.5                # halving schedule start
    significance_threshold: float = 1e-3   # required validation improvement, nats/step
    clip_threshold: float = 1.0
    weight_noise_std: float = 0.075
    max_epochs: int = 10
    patience: int = 10
    seed: int = 0
    eval_every: int = 0                    # updates between validations; 0: once per epoch

    def __post_init__(self):
        if self.schedule not in ("inverse", "halving"):
            raise ConfigurationError(f"unknown schedule {self.schedule!r}")
        if self.beta <= 0:
            raise ConfigurationError("beta must be > 0")
        if self.clip_threshold <= 0:
            raise ConfigurationError("clip_threshold must be > 0")
        if self.weight_noise_std < 0:
            raise ConfigurationError("weight_noise_std must be >= 0")
        if self.max_epochs < 1:
            raise ConfigurationError("max_epochs must be >= 1")
        if self.patience < 1:
            raise ConfigurationError("patience must be >= 1")


@dataclass
class LogRecord:
    update: int
    lr: float
    train_nll: float    # mean nats/step since the previous validation
    valid_nll: float    # mean nats/step over the validation set


@dataclass
class TrainLog:
    records: list[LogRecord] = field(default_factory=list)
    terminal_reason: str = ""

    CSV_HEADER = "update,lr,train_nll,valid_nll"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.records:
            lines.append(f"{r.update},{r.lr!r},{r.train_nll!r},{r.valid_nll!r}")
        return "\n".join(lines) + "\n"

    def best_valid(self) -> LogRecord:
        return min(self.records, key=lambda r: r.valid_nll)


def lr_inverse(tau: float, tau0: float, beta: float) -> float:
    """1 / (1 + max(0, tau - tau0) / beta); equals 1 until tau passes tau0."""
    if beta <= 0:
        raise ConfigurationError("beta must be > 0")
    return 1.0 / (1.0 + max(0.0, tau - tau0) / beta)


def lr_halving_step(current_lr: float, prev_val_nll: float, new_val_nll: float,
                    significance_threshold: float) -> float:
    """Halve unless validation improved by more than the significance threshold."""
    if current_lr <= 0:
        raise ConfigurationError("current_lr must be > 0")
    if new_val_nll > prev_val_nll - significance_threshold:
        return current_lr / 2.0
    return current_lr


def perturb_weights(params: ParamSet, rng: Rng, std: float) -> ParamSet:
    """Copy of the parameters with N(0, std^2) added to every weight and bias.

    The original is untouched; train-time gradients are evaluated at the
    perturbed point while updates apply to the clean parameters.
    """
    if std < 0:
        raise ConfigurationError("noise std must be >= 0")
    out = params.copy()
    if std == 0.0:
        return out
    for name, arr in out.items():
        out[name] = arr + rng.normal(arr.shape, std)
    return out


def validation_nll(params: ParamSet, config: ModelConfig,
                   chunks: Iterable[SubseqChunk]) -> float:
    """Mean nats per prediction step over a chunk stream, state carried."""
    state: HiddenState | None = None
    parts: list[np.ndarray] = []
    steps = 0
    for chunk in chunks:
        if not chunk.carry_state:
            state = HiddenState.zeros(config)
        res = forward(params, config, chunk.inputs, chunk.targets, state)
        state = res.final_state
        parts.append(res.nll_steps)
        steps += res.nll_steps.shape[0]
    if steps == 0:
        raise ConfigurationError("validation data contains no prediction steps")
    return math.fsum(np.concatenate(parts)) / steps


def sgd_train(params: ParamSet, config: ModelConfig,
              train_epoch: Callable[[], Iterable[SubseqChunk]],
              valid_chunks: list[SubseqChunk],
              plan: TrainPlan) -> tuple[ParamSet, TrainLog]:
    """Train in place from ``params`` and return (best parameters, log).

    ``train_epoch()`` must yield one epoch's subsequence chunks in order;
    it is called once per epoch. On numeric divergence a NumericError is
    raised with the log collected so far attached.
    """
    log = TrainLog()
    state = HiddenState.zeros(config)
    update = 0
    tau0 = float(plan.tau0) if plan.tau0 is not None else math.inf
    auto_tau0 = plan.tau0 is None and plan.schedule == "inverse"
    halving_lr = plan.initial_lr
    best_nll = math.inf
    best_params = params.copy()
    prev_val: float | None = None
    streak = 0
    interval_nll = 0.0
    interval_steps = 0

    def current_lr() -> float:
        if plan.schedule == "inverse":
            return plan.base_lr * lr_inverse(update, tau0, plan.beta)
        return halving_lr

    def validate() -> bool:
        """Record a validation; returns True when training should stop."""
        nonlocal tau0, halving_lr, best_nll, best_params, prev_val, streak
        nonlocal interval_nll, interval_steps
        val = validation_nll(params, config, valid_chunks)
        train_mean = interval_nll / interval_steps if interval_steps else math.nan
        log.records.append(LogRecord(update, current_lr(), train_mean, val))
        interval_nll = 0.0
        interval_steps = 0
        if prev_val is not None:
            if auto_tau0 and math.isinf(tau0) and val > prev_val:
                tau0 = float(update)
            if plan.schedule == "halving":
                halving_lr = lr_halving_step(halving_lr, prev_val, val,
                                             plan.significance_threshold)
        prev_val = val
        if val < best_nll:
            best_nll = val
            best_params = params.copy()
            streak = 0
        else:
            streak += 1
        return streak >= plan.patience

    try:
        for _ in range(plan.max_epochs):
            for chunk in train_epoch():
                if not chunk.carry_state:
                    state = HiddenState.zeros(config)
                if plan.weight_noise_std > 0.0:
                    noise_rng = Rng(plan.seed, _NOISE_STREAM_BASE + update)
                    at = perturb_weights(params, noise_rng, plan.weight_noise_std)
                else:
                    at = params
                res = bptt(at, config, chunk.inputs, chunk.targets, state)
                state = res.final_state
                grads = clip_gradients(res.grads, plan.clip_threshold)
                lr = current_lr()
                for name, g in grads.items():
                    params[name] = params[name] - (lr * params.lr_multiplier(name)) * g
                interval_nll += res.total_nll
                interval_steps += res.nll_steps.shape[0]
                update += 1
                if plan.eval_every and update % plan.eval_every == 0:
                    if validate():
                        log.terminal_reason = "patience"
                        return best_params, log
            if not plan.eval_every:
                if validate():
                    log.terminal_reason = "patience"
                    return best_params, log
    except NumericError as err:
        err.train_log = log
        log.terminal_reason = f"diverged: {err}"
        raise
    log.terminal_reason = "max_epochs"
    return best_params, log
