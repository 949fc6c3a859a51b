"""Backpropagation through time, gradient clipping, and a finite-difference oracle.

``bptt`` returns the exact analytic gradient of the summed next-step
cross-entropy over one (sub)sequence. Gradients never flow across subsequence
boundaries: the carried-in state is treated as a constant, even though forward
state carries over (truncated BPTT).

``finite_difference_grad`` is an independent check built only on forward
evaluations: central differences per scalar parameter. ``gradient_check``
compares the two and reports the worst relative error per parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError
from .model import HiddenState, ModelConfig, ParamSet, _forward_trace, _Trace

GradSet = dict[str, np.ndarray]

# Relative slack when testing the norm against the threshold. Rescaling rounds
# each entry, so a clipped gradient's recomputed norm can sit a few ulp above
# the threshold; the slack makes clipping exactly idempotent.
_CLIP_SLACK = 1e-12


def zero_grads(params: ParamSet) -> GradSet:
    return {name: np.zeros_like(arr) for name, arr in params.items()}


def global_grad_norm(grads: GradSet) -> float:
    """L2 norm over all parameters jointly, in a fixed accumulation order."""
    sq = [float(np.dot(g.ravel(), g.ravel())) for g in grads.values()]
    return math.sqrt(math.fsum(sq))


def clip_gradients(grads: GradSet, threshold: float) -> GradSet:
    """Rescale the whole gradient to L2 norm ``threshold`` when it exceeds it.

    The direction is preserved exactly; below the threshold the input arrays
    are returned unchanged. Idempotent bit-for-bit.
    """
    if threshold <= 0:
        raise ConfigurationError(f"clip threshold must be > 0, got {threshold}")
    norm = global_grad_norm(grads)
    if norm <= threshold * (1.0 + _CLIP_SLACK):
        return dict(grads)
    scale = threshold / norm
    return {name: g * scale for name, g in grads.items()}


def add_grads(total: GradSet, grads: GradSet) -> GradSet:
    """In-place elementwise sum; summation across sequences is caller-ordered."""
    for name, g in grads.items():
        total[name] += g
    return total


@dataclass
class BpttResult:
    grads: GradSet
    nll_steps: np.ndarray
    total_nll: float
    final_state: HiddenState


def _output_backward(params: ParamSet, config: ModelConfig, tr: _Trace,
                     grads: GradSet) -> np.ndarray:
    """Gradients of the output stack; returns dL/dH for the transition."""
    T = tr.T
    dLogits = tr.P.copy()
    if config.output_head == "softmax":
        dLogits[np.arange(T), tr.tgt_idx] -= 1.0
    else:
        dLogits -= tr.tgt_dense
    if config.deep_output:
        grads["V2"][:] = tr.A.T @ dLogits
        grads["b_y"][:] = dLogits.sum(axis=0)
        dA = dLogits @ params["V2"].T
        dO1 = dA * config.output_inter_nl.derivative_from_output(tr.A)
        grads["V1"][:] = tr.H.T @ dO1
        grads["b_o"][:] = dO1.sum(axis=0)
        return dO1 @ params["V1"].T
    grads["V"][:] = tr.H.T @ dLogits
    grads["b_y"][:] = dLogits.sum(axis=0)
    return dLogits @ params["V"].T


def _input_grad(tr: _Trace, dPre: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    dU = np.zeros(shape)
    if tr.use_idx:
        np.add.at(dU, tr.idx, dPre)
    else:
        dU[:] = tr.X.T @ dPre
    return dU


def _prepend_state(level_row: np.ndarray, H: np.ndarray) -> np.ndarray:
    """States feeding each step's recurrent term: h0 then H[:-1]."""
    if H.shape[0] == 0:
        return np.empty_like(H)
    return np.vstack((level_row[None, :], H[:-1]))


def bptt(params: ParamSet, config: ModelConfig, inputs, targets,
         h0: HiddenState | None = None) -> BpttResult:
    """Analytic gradient of the summed cross-entropy over one subsequence.

    The gradient of the carried-in state is discarded, so chunked training
    takes gradient steps that are local to each subsequence even though the
    forward state is carried across chunks.
    """
    tr = _forward_trace(params, config, inputs, targets, h0)
    state0 = h0.per_level if h0 is not None else np.zeros((config.levels, config.hidden_dim))
    grads = zero_grads(params)
    total = math.fsum(tr.nll_steps)
    if tr.T == 0:
        return BpttResult(grads, tr.nll_steps, total, tr.final_state)
    dHout = _output_backward(params, config, tr, grads)
    nl = config.hidden_nl.value
    a = config.architecture
    if a == "rnn":
        dPre = kernels.trans_bwd_rnn(tr.H, params["W"], nl, dHout)
        Hprev = _prepend_state(state0[0], tr.H)
        grads["W"][:] = Hprev.T @ dPre
        grads["U"][:] = _input_grad(tr, dPre, params["U"].shape)
        grads["b_h"][:] = dPre.sum(axis=0)
    elif config.deep_transition:
        if config.has_shortcuts:
            Sh, use_sc = params["S_h"], True
        else:
            Sh, use_sc = kernels.EMPTY_DENSE, False
        dPre1, dPre2 = kernels.trans_bwd_dt(tr.Z, tr.H, params["W1"], params["W2"],
                                            Sh, use_sc,
                                            config.transition_inter_nl.value, nl, dHout)
        Hprev = _prepend_state(state0[0], tr.H)
        grads["W2"][:] = tr.Z.T @ dPre2
        grads["b_h"][:] = dPre2.sum(axis=0)
        grads["W1"][:] = Hprev.T @ dPre1
        grads["b_z"][:] = dPre1.sum(axis=0)
        grads["U"][:] = _input_grad(tr, dPre1, params["U"].shape)
        if use_sc:
            grads["S_h"][:] = Hprev.T @ dPre2
            grads["S_x"][:] = _input_grad(tr, dPre2, params["S_x"].shape)
    else:  # srnn
        L = config.levels
        W = np.ascontiguousarray(np.stack([params["W"]] + [params[f"W{l}"] for l in range(2, L + 1)]))
        Urest = np.ascontiguousarray(np.stack([params[f"U{l}"] for l in range(2, L + 1)]))
        dPre = kernels.trans_bwd_srnn(tr.HL, W, Urest, nl, dHout)
        for l in range(L):
            w_name = "W" if l == 0 else f"W{l + 1}"
            b_name = "b_h" if l == 0 else f"b_h{l + 1}"
            Hprev = _prepend_state(state0[l], tr.HL[l])
            grads[w_name][:] = Hprev.T @ dPre[l]
            grads[b_name][:] = dPre[l].sum(axis=0)
            if l == 0:
                grads["U"][:] = _input_grad(tr, dPre[0], params["U"].shape)
            else:
                grads[f"U{l + 1}"][:] = tr.HL[l - 1].T @ dPre[l]
    return BpttResult(grads, tr.nll_steps, total, tr.final_state)


def finite_difference_grad(params: ParamSet, config: ModelConfig, inputs, targets,
                           h0: HiddenState | None = None,
                           eps: float = 1e-5) -> GradSet:
    """Central-difference gradient, (J(p+eps) - J(p-eps)) / 2 eps per scalar.

    Built purely on forward evaluations; costs two passes per parameter, so
    keep the model at toy size.
    """
    if eps <= 0:
        raise ConfigurationError(f"finite-difference step must be > 0, got {eps}")
    from .model import forward

    grads = zero_grads(params)
    for name, arr in params.items():
        flat = arr.ravel()
        gflat = grads[name].ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            plus = forward(params, config, inputs, targets, h0).total_nll
            flat[i] = orig - eps
            minus = forward(params, config, inputs, targets, h0).total_nll
            flat[i] = orig
            gflat[i] = (plus - minus) / (2.0 * eps)
    return grads


def relative_errors(analytic: GradSet, numeric: GradSet) -> dict[str, float]:
    """Worst elementwise relative error per parameter.

    Error metric: |a - b| / max(|a|, |b|, 1e-8).
    """
    out = {}
    for name in analytic:
        a, b = analytic[name], numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)
        out[name] = float(np.max(np.abs(a - b) / denom)) if a.size else 0.0
    return out


def gradient_check(params: ParamSet, config: ModelConfig, inputs, targets,
                   h0: HiddenState | None = None, eps: float = 1e-5,
                   corrupt_param: str | None = None) -> dict[str, float]:
    """Compare bptt against central differences; returns per-parameter errors.

    ``corrupt_param`` deliberately offsets one analytic gradient entry first
    (fault-injection hook for verifying that the check can fail).
    """
    analytic = bptt(params, config, inputs, targets, h0).grads
    if corrupt_param is not None:
        if corrupt_param not in analytic:
            raise ConfigurationError(f"unknown parameter {corrupt_param!r}")
        analytic[corrupt_param].ravel()[0] += 1.0
    numeric = finite_difference_grad(params, config, inputs, targets, h0, eps)
    return relative_errors(analytic, numeric)
