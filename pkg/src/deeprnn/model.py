"""Model architectures and the per-timestep forward computation.

Four recurrent families are supported, named by the ``architecture`` field of
:class:`ModelConfig`:

* ``rnn``:  h_t = f(h_{t-1} W + x_t U + b)
* ``dt`` / ``dts``: the hidden-to-hidden transition is a one-hidden-layer MLP,
  ``dts`` adds direct shortcut paths h_{t-1} S_h and x_t S_x into the outer
  pre-activation.
* ``dot`` / ``dots``: deep transition plus a one-hidden-layer MLP between the
  hidden state and the output (the output stack never has shortcuts).
* ``srnn``: two or more stacked recurrent levels; level l is driven by its own
  previous state and by level l-1 at the same step, and only the top level
  feeds the output.

Weight matrices are stored fan_in x fan_out, so every map reads ``v @ M + b``.
The output head is either a softmax over symbols or independent per-dimension
bernoulli means.

Sequences may be passed as int64 index arrays (one-hot semantics, e.g. text)
or as dense float (T, input_dim) arrays (e.g. piano rolls). Targets follow the
head: class indices for softmax, dense (T, output_dim) arrays for bernoulli.

Forward results are bit-identical under any split of a sequence into chunks
with carried hidden state: per-step arithmetic has chunk-independent shape and
order (see kernels), and total negative log-likelihood is an exactly rounded
sum (math.fsum) of the per-step values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, NumericError
from .linalg import Nonlinearity

ARCHITECTURES = ("rnn", "dt", "dts", "dot", "dots", "srnn")
OUTPUT_HEADS = ("softmax", "bernoulli")


@dataclass(frozen=True)
class ModelConfig:
    architecture: str
    input_dim: int
    output_dim: int
    hidden_dim: int
    transition_inter_dim: int = 0
    output_inter_dim: int = 0
    levels: int = 1
    hidden_nl: Nonlinearity = Nonlinearity.SIGMOID
    transition_inter_nl: Nonlinearity = Nonlinearity.SIGMOID
    output_inter_nl: Nonlinearity = Nonlinearity.SIGMOID
    output_head: str = "softmax"

    def __post_init__(self):
        a = self.architecture
        if a not in ARCHITECTURES:
            raise ConfigurationError(f"unknown architecture {a!r}; expected one of {ARCHITECTURES}")
        if self.output_head not in OUTPUT_HEADS:
            raise ConfigurationError(f"unknown output head {self.output_head!r}")
        for dim_name in ("input_dim", "output_dim", "hidden_dim"):
            if getattr(self, dim_name) < 1:
                raise ConfigurationError(f"{dim_name} must be >= 1")
        ti, oi = self.transition_inter_dim, self.output_inter_dim
        if a == "rnn" and (ti != 0 or oi != 0):
            raise ConfigurationError("rnn takes no intermediate layers; set inter dims to 0")
        if a in ("dt", "dts") and (ti <= 0 or oi != 0):
            raise ConfigurationError(f"{a} needs transition_inter_dim > 0 and output_inter_dim == 0")
        if a in ("dot", "dots") and (ti <= 0 or oi <= 0):
            raise ConfigurationError(f"{a} needs transition_inter_dim > 0 and output_inter_dim > 0")
        if a == "srnn":
            if self.levels < 2:
                raise ConfigurationError("srnn needs levels >= 2")
            if ti != 0 or oi != 0:
                raise ConfigurationError("srnn takes no intermediate layers; set inter dims to 0")
        elif self.levels != 1:
            raise ConfigurationError(f"levels must be 1 for architecture {a!r}")

    @property
    def has_shortcuts(self) -> bool:
        return self.architecture in ("dts", "dots")

    @property
    def deep_transition(self) -> bool:
        return self.architecture in ("dt", "dts", "dot", "dots")

    @property
    def deep_output(self) -> bool:
        return self.architecture in ("dot", "dots")


class ParamSet:
    """Ordered, named collection of parameter arrays.

    Iteration order is the canonical build order; initialization draws,
    checkpoint layout and gradient bookkeeping all follow it. Each entry
    carries a per-parameter learning-rate multiplier (default 1.0).
    """

    def __init__(self):
        self._arrays: dict[str, np.ndarray] = {}
        self._lr: dict[str, float] = {}

    def add(self, name: str, array: np.ndarray, lr_multiplier: float = 1.0) -> None:
        if name in self._arrays:
            raise ConfigurationError(f"duplicate parameter name {name!r}")
        if lr_multiplier <= 0:
            raise ConfigurationError(f"lr multiplier for {name!r} must be > 0")
        self._arrays[name] = np.asarray(array, dtype=np.float64)
        self._lr[name] = float(lr_multiplier)

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __setitem__(self, name: str, array: np.ndarray) -> None:
        if name not in self._arrays:
            raise ConfigurationError(f"unknown parameter {name!r}")
        if self._arrays[name].shape != array.shape:
            raise ConfigurationError(
                f"shape mismatch for {name!r}: {self._arrays[name].shape} vs {array.shape}")
        self._arrays[name] = np.asarray(array, dtype=np.float64)

    def __contains__(self, name: str) -> bool:
        return name in self._arrays

    def __iter__(self):
        return iter(self._arrays)

    def names(self) -> list[str]:
        return list(self._arrays)

    def items(self):
        return self._arrays.items()

    def lr_multiplier(self, name: str) -> float:
        return self._lr[name]

    def set_lr_multiplier(self, name: str, value: float) -> None:
        if value <= 0:
            raise ConfigurationError(f"lr multiplier for {name!r} must be > 0")
        self._lr[name] = float(value)

    def copy(self) -> "ParamSet":
        out = ParamSet()
        for name, arr in self._arrays.items():
            out.add(name, arr.copy(), self._lr[name])
        return out

    def total_parameters(self) -> int:
        return sum(a.size for a in self._arrays.values())


@dataclass
class HiddenState:
    """Per-level hidden vectors, shape (levels, hidden_dim)."""

    per_level: np.ndarray

    @classmethod
    def zeros(cls, config: ModelConfig) -> "HiddenState":
        return cls(np.zeros((config.levels, config.hidden_dim)))

    @property
    def top(self) -> np.ndarray:
        return self.per_level[-1]

    def copy(self) -> "HiddenState":
        return HiddenState(self.per_level.copy())


def _param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Canonical name -> shape map, in build order."""
    i, o, n = config.input_dim, config.output_dim, config.hidden_dim
    m, mo = config.transition_inter_dim, config.output_inter_dim
    shapes: dict[str, tuple[int, ...]] = {}
    a = config.architecture
    if a == "rnn":
        shapes.update({"U": (i, n), "W": (n, n), "b_h": (n,)})
    elif a in ("dt", "dts", "dot", "dots"):
        shapes.update({"U": (i, m), "W1": (n, m), "b_z": (m,),
                       "W2": (m, n), "b_h": (n,)})
        if config.has_shortcuts:
            shapes.update({"S_h": (n, n), "S_x": (i, n)})
    else:  # srnn
        shapes.update({"U": (i, n), "W": (n, n), "b_h": (n,)})
        for l in range(2, config.levels + 1):
            shapes.update({f"U{l}": (n, n), f"W{l}": (n, n), f"b_h{l}": (n,)})
    if config.deep_output:
        shapes.update({"V1": (n, mo), "b_o": (mo,), "V2": (mo, o), "b_y": (o,)})
    else:
        shapes.update({"V": (n, o), "b_y": (o,)})
    return shapes


def build(config: ModelConfig) -> tuple[ParamSet, int]:
    """Zero-filled parameter skeleton plus the exact scalar parameter count."""
    params = ParamSet()
    for name, shape in _param_shapes(config).items():
        params.add(name, np.zeros(shape))
    return params, params.total_parameters()


def transition_param_names(config: ModelConfig) -> tuple[str, ...]:
    """Names of the parameters that make up the state-transition function."""
    names = []
    for name in _param_shapes(config):
        if name in ("V", "V1", "b_o", "V2", "b_y"):
            continue
        names.append(name)
    return tuple(names)


def param_roles(config: ModelConfig) -> dict[str, str]:
    """Role of each parameter: recurrent | input | output | output_inter | bias.

    ``recurrent`` marks matrices connecting hidden-typed activations (these
    get sparse, spectrally rescaled initialization); ``input`` and ``output``
    matrices touch x_t or y_t; ``output_inter`` is the hidden-to-intermediate
    matrix of a deep output stack.
    """
    roles: dict[str, str] = {}
    for name in _param_shapes(config):
        if name.startswith("b_"):
            roles[name] = "bias"
        elif name in ("U", "S_x"):
            roles[name] = "input"
        elif name in ("V", "V2"):
            roles[name] = "output"
        elif name == "V1":
            roles[name] = "output_inter"
        else:  # W, W1, W2, S_h, srnn U{l>=2}
            roles[name] = "recurrent"
    return roles


def bias_nonlinearity(config: ModelConfig, name: str) -> Nonlinearity | None:
    """Nonlinearity applied to the pre-activation this bias feeds (None for the head)."""
    if name == "b_z":
        return config.transition_inter_nl
    if name == "b_o":
        return config.output_inter_nl
    if name == "b_y":
        return None
    if name == "b_h" or name.startswith("b_h"):
        return config.hidden_nl
    raise ConfigurationError(f"{name!r} is not a bias parameter")


def _check_state(config: ModelConfig, h: HiddenState) -> np.ndarray:
    arr = np.asarray(h.per_level, dtype=np.float64)
    if arr.shape != (config.levels, config.hidden_dim):
        raise ConfigurationError(
            f"hidden state shape {arr.shape} does not match "
            f"(levels={config.levels}, hidden_dim={config.hidden_dim})")
    return np.ascontiguousarray(arr)


def _coerce_inputs(config: ModelConfig, inputs) -> tuple[np.ndarray, np.ndarray, bool, int]:
    """Normalize a sequence to (dense, idx, use_idx, T)."""
    arr = np.asarray(inputs)
    if arr.ndim == 1 and np.issubdtype(arr.dtype, np.integer):
        idx = np.ascontiguousarray(arr, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= config.input_dim):
            raise ConfigurationError(
                f"input symbol index out of range [0, {config.input_dim})")
        return kernels.EMPTY_DENSE, idx, True, idx.shape[0]
    dense = np.ascontiguousarray(arr, dtype=np.float64)
    if dense.ndim != 2 or dense.shape[1] != config.input_dim:
        raise ConfigurationError(
            f"inputs must be (T, {config.input_dim}) or an int index array; got shape {arr.shape}")
    return dense, kernels.EMPTY_IDX, False, dense.shape[0]


def _coerce_targets(config: ModelConfig, targets, T: int) -> tuple[np.ndarray, np.ndarray]:
    if config.output_head == "softmax":
        tgt = np.ascontiguousarray(np.asarray(targets), dtype=np.int64)
        if tgt.shape != (T,):
            raise ConfigurationError(f"softmax targets must be {T} class indices, got shape {tgt.shape}")
        if tgt.size and (tgt.min() < 0 or tgt.max() >= config.output_dim):
            raise ConfigurationError(f"target index out of range [0, {config.output_dim})")
        return tgt, kernels.EMPTY_DENSE
    dense = np.ascontiguousarray(np.asarray(targets), dtype=np.float64)
    if dense.shape != (T, config.output_dim):
        raise ConfigurationError(
            f"bernoulli targets must have shape ({T}, {config.output_dim}), got {dense.shape}")
    return kernels.EMPTY_IDX, dense


@dataclass
class _Trace:
    """Stored activations of one forward pass, consumed by backprop."""

    X: np.ndarray
    idx: np.ndarray
    use_idx: bool
    T: int
    tgt_idx: np.ndarray
    tgt_dense: np.ndarray
    H: np.ndarray                  # hidden states feeding the output, (T, n)
    Z: np.ndarray | None           # deep-transition intermediate, (T, m)
    HL: np.ndarray | None          # srnn per-level states, (L, T, n)
    A: np.ndarray | None           # deep-output intermediate, (T, mo)
    P: np.ndarray                  # per-step output distributions, (T, o)
    nll_steps: np.ndarray
    final_state: HiddenState


@dataclass
class ForwardResult:
    distributions: np.ndarray      # (T, output_dim)
    nll_steps: np.ndarray          # (T,), natural log units
    total_nll: float
    final_state: HiddenState


def _run_transition(params: ParamSet, config: ModelConfig, X, idx, use_idx,
                    h0: np.ndarray):
    """Returns (H_for_output, Z, HL, final_per_level)."""
    a = config.architecture
    nl = config.hidden_nl.value
    if a == "rnn":
        H = kernels.trans_fwd_rnn(X, idx, use_idx, params["U"], params["W"],
                                  params["b_h"], nl, h0[0])
        final = H[-1:].copy() if H.shape[0] else h0.copy()
        return H, None, None, final
    if config.deep_transition:
        if config.has_shortcuts:
            Sh, Sx, use_sc = params["S_h"], params["S_x"], True
        else:
            Sh = Sx = kernels.EMPTY_DENSE
            use_sc = False
        Z, H = kernels.trans_fwd_dt(X, idx, use_idx, params["U"],
                                    params["W1"], params["b_z"],
                                    params["W2"], params["b_h"],
                                    Sh, Sx, use_sc,
                                    config.transition_inter_nl.value, nl, h0[0])
        final = H[-1:].copy() if H.shape[0] else h0.copy()
        return H, Z, None, final
    # srnn
    L = config.levels
    W = np.ascontiguousarray(np.stack([params["W"]] + [params[f"W{l}"] for l in range(2, L + 1)]))
    b = np.ascontiguousarray(np.stack([params["b_h"]] + [params[f"b_h{l}"] for l in range(2, L + 1)]))
    if L > 1:
        Urest = np.ascontiguousarray(np.stack([params[f"U{l}"] for l in range(2, L + 1)]))
    else:
        Urest = np.empty((0, config.hidden_dim, config.hidden_dim))
    HL = kernels.trans_fwd_srnn(X, idx, use_idx, params["U"], Urest, W, b, nl, h0)
    final = HL[:, -1, :].copy() if HL.shape[1] else h0.copy()
    return HL[-1], None, HL, final


def _run_output(params: ParamSet, config: ModelConfig, H: np.ndarray,
                tgt_idx, tgt_dense, has_targets: bool):
    head = kernels.HEAD_SOFTMAX if config.output_head == "softmax" else kernels.HEAD_BERNOULLI
    if config.deep_output:
        A, P, nll = kernels.out_fwd_deep(H, params["V1"], params["b_o"],
                                         config.output_inter_nl.value,
                                         params["V2"], params["b_y"],
                                         head, tgt_idx, tgt_dense, has_targets)
        return A, P, nll
    P, nll = kernels.out_fwd_shallow(H, params["V"], params["b_y"],
                                     head, tgt_idx, tgt_dense, has_targets)
    return None, P, nll


def _forward_trace(params: ParamSet, config: ModelConfig, inputs, targets,
                   h0: HiddenState | None) -> _Trace:
    state0 = _check_state(config, h0) if h0 is not None else np.zeros(
        (config.levels, config.hidden_dim))
    X, idx, use_idx, T = _coerce_inputs(config, inputs)
    tgt_idx, tgt_dense = _coerce_targets(config, targets, T)
    H, Z, HL, final = _run_transition(params, config, X, idx, use_idx, state0)
    A, P, nll = _run_output(params, config, H, tgt_idx, tgt_dense, True)
    bad = np.flatnonzero(~np.isfinite(nll))
    if bad.size:
        raise NumericError(f"non-finite loss at timestep {bad[0]}", timestep=int(bad[0]))
    return _Trace(X=X, idx=idx, use_idx=use_idx, T=T, tgt_idx=tgt_idx,
                  tgt_dense=tgt_dense, H=H, Z=Z, HL=HL, A=A,
                  P=P, nll_steps=nll, final_state=HiddenState(final))


def forward(params: ParamSet, config: ModelConfig, inputs, targets,
            h0: HiddenState | None = None) -> ForwardResult:
    """Run the model over a (sub)sequence and accumulate next-step loss.

    ``targets`` are the next-step frames aligned with ``inputs``. The summed
    loss is categorical cross-entropy for the softmax head, or the sum of
    independent per-dimension bernoulli cross-entropies, in nats. The returned
    state can be fed back as ``h0`` to continue the same sequence.
    """
    tr = _forward_trace(params, config, inputs, targets, h0)
    return ForwardResult(distributions=tr.P, nll_steps=tr.nll_steps,
                         total_nll=math.fsum(tr.nll_steps),
                         final_state=tr.final_state)


def step_transition(params: ParamSet, config: ModelConfig, x,
                    h_prev: HiddenState) -> HiddenState:
    """One application of the state-transition function f_h."""
    state0 = _check_state(config, h_prev)
    x = np.asarray(x)
    if x.ndim == 0 and np.issubdtype(x.dtype, np.integer):
        inputs = np.array([int(x)], dtype=np.int64)
    elif x.ndim == 1 and np.issubdtype(x.dtype, np.integer) and x.shape[0] == 1:
        inputs = np.ascontiguousarray(x, dtype=np.int64)
    else:
        if x.shape != (config.input_dim,):
            raise ConfigurationError(f"step input must have dim {config.input_dim}, got {x.shape}")
        inputs = np.ascontiguousarray(x, dtype=np.float64)[None, :]
    X, idx, use_idx, _ = _coerce_inputs(config, inputs)
    _, _, _, final = _run_transition(params, config, X, idx, use_idx, state0)
    return HiddenState(final)


def step_output(params: ParamSet, config: ModelConfig, h: HiddenState) -> np.ndarray:
    """One application of the output function f_o; returns the distribution."""
    state = _check_state(config, h)
    H = np.ascontiguousarray(state[-1][None, :])
    _, P, _ = _run_output(params, config, H,
                          np.zeros(1, dtype=np.int64), kernels.EMPTY_DENSE, False)
    return P[0]


# Operator-framework facade: the summary operator folds an input into the
# state, the predict operator reads a distribution out of it. The summary's
# output dimensionality always equals the state's.
plus_op = step_transition
predict_op = step_output
