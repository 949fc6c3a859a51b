"""Compiled per-timestep recurrence kernels (internal).

These numba kernels carry out the sequential part of forward and backward
passes. Every arithmetic step inside them has a shape and evaluation order
that depends only on the model dimensions, never on how a sequence was cut
into subsequences. Together with exact summation of per-step losses at the
call sites, this makes forward results bit-identical under any chunking with
carried state.

Within a pre-activation the accumulation order is fixed: bias, then the input
(or lower-level) term, then the recurrent term, then shortcut terms. Zero
input entries are skipped; adding them could only flip signed zeros.

Loss is accumulated per step: softmax head uses the log-sum-exp form, the
bernoulli head uses softplus(logit) - target * logit, both stable for large
logits. Backward kernels only produce per-step pre-activation gradients; the
callers turn those into parameter gradients with batched matmuls (parameter
gradients carry no chunk-invariance contract).
"""

import math

import numpy as np
from numba import njit

# Dispatch codes; must match linalg.Nonlinearity values.
SIGMOID, TANH, RECTIFIER, IDENTITY = 0, 1, 2, 3
HEAD_SOFTMAX, HEAD_BERNOULLI = 0, 1


@njit(cache=True, inline="always")
def _act(code, x):
    if code == SIGMOID:
        return 1.0 / (1.0 + math.exp(-x))
    elif code == TANH:
        return math.tanh(x)
    elif code == RECTIFIER:
        return x if x > 0.0 else 0.0
    else:
        return x


@njit(cache=True, inline="always")
def _dact(code, y):
    # Derivative written in terms of the stored activation value.
    if code == SIGMOID:
        return y * (1.0 - y)
    elif code == TANH:
        return 1.0 - y * y
    elif code == RECTIFIER:
        return 1.0 if y > 0.0 else 0.0
    else:
        return 1.0


@njit(cache=True, inline="always")
def _add_input_term(pre, X, idx, use_idx, U, t):
    # pre += x_t @ U, where x_t is U's row for index-coded inputs.
    m = pre.shape[0]
    if use_idx:
        k = idx[t]
        for j in range(m):
            pre[j] += U[k, j]
    else:
        for i in range(U.shape[0]):
            xi = X[t, i]
            if xi != 0.0:
                for j in range(m):
                    pre[j] += xi * U[i, j]


@njit(cache=True, inline="always")
def _add_rowacc(pre, h, W):
    # pre += h @ W with a fixed row-major accumulation order.
    for i in range(W.shape[0]):
        hi = h[i]
        if hi != 0.0:
            for j in range(W.shape[1]):
                pre[j] += hi * W[i, j]


@njit(cache=True)
def trans_fwd_rnn(X, idx, use_idx, U, W, b, nl, h0):
    T = idx.shape[0] if use_idx else X.shape[0]
    n = W.shape[0]
    H = np.empty((T, n))
    h = h0.copy()
    pre = np.empty(n)
    for t in range(T):
        for j in range(n):
            pre[j] = b[j]
        _add_input_term(pre, X, idx, use_idx, U, t)
        _add_rowacc(pre, h, W)
        for j in range(n):
            h[j] = _act(nl, pre[j])
            H[t, j] = h[j]
    return H


@njit(cache=True)
def trans_fwd_dt(X, idx, use_idx, U, W1, b1, W2, b2, Sh, Sx, use_sc, nl1, nl, h0):
    T = idx.shape[0] if use_idx else X.shape[0]
    m = W1.shape[1]
    n = W2.shape[1]
    Z = np.empty((T, m))
    H = np.empty((T, n))
    h = h0.copy()
    pre1 = np.empty(m)
    pre2 = np.empty(n)
    z = np.empty(m)
    for t in range(T):
        for j in range(m):
            pre1[j] = b1[j]
        _add_input_term(pre1, X, idx, use_idx, U, t)
        _add_rowacc(pre1, h, W1)
        for j in range(m):
            z[j] = _act(nl1, pre1[j])
            Z[t, j] = z[j]
        for j in range(n):
            pre2[j] = b2[j]
        _add_rowacc(pre2, z, W2)
        if use_sc:
            _add_rowacc(pre2, h, Sh)
            _add_input_term(pre2, X, idx, use_idx, Sx, t)
        for j in range(n):
            h[j] = _act(nl, pre2[j])
            H[t, j] = h[j]
    return Z, H


@njit(cache=True)
def trans_fwd_srnn(X, idx, use_idx, U1, Urest, W, b, nl, h0):
    T = idx.shape[0] if use_idx else X.shape[0]
    L = W.shape[0]
    n = W.shape[1]
    H = np.empty((L, T, n))
    h = h0.copy()
    pre = np.empty(n)
    for t in range(T):
        for l in range(L):
            for j in range(n):
                pre[j] = b[l, j]
            if l == 0:
                _add_input_term(pre, X, idx, use_idx, U1, t)
            else:
                _add_rowacc(pre, h[l - 1], Urest[l - 1])
            _add_rowacc(pre, h[l], W[l])
            for j in range(n):
                h[l, j] = _act(nl, pre[j])
                H[l, t, j] = h[l, j]
    return H


@njit(cache=True)
def out_fwd_shallow(H, V, by, head, tgt_idx, tgt_dense, has_targets):
    T = H.shape[0]
    o = V.shape[1]
    P = np.empty((T, o))
    nll = np.zeros(T)
    logits = np.empty(o)
    for t in range(T):
        for k in range(o):
            logits[k] = by[k]
        _add_rowacc(logits, H[t], V)
        _head_step(P, nll, logits, head, tgt_idx, tgt_dense, has_targets, t)
    return P, nll


@njit(cache=True)
def out_fwd_deep(H, V1, bo, nlo, V2, by, head, tgt_idx, tgt_dense, has_targets):
    T = H.shape[0]
    mo = V1.shape[1]
    o = V2.shape[1]
    A = np.empty((T, mo))
    P = np.empty((T, o))
    nll = np.zeros(T)
    pre = np.empty(mo)
    a = np.empty(mo)
    logits = np.empty(o)
    for t in range(T):
        for j in range(mo):
            pre[j] = bo[j]
        _add_rowacc(pre, H[t], V1)
        for j in range(mo):
            a[j] = _act(nlo, pre[j])
            A[t, j] = a[j]
        for k in range(o):
            logits[k] = by[k]
        _add_rowacc(logits, a, V2)
        _head_step(P, nll, logits, head, tgt_idx, tgt_dense, has_targets, t)
    return A, P, nll


@njit(cache=True, inline="always")
def _head_step(P, nll, logits, head, tgt_idx, tgt_dense, has_targets, t):
    o = logits.shape[0]
    if head == HEAD_SOFTMAX:
        m = logits[0]
        for k in range(1, o):
            if logits[k] > m:
                m = logits[k]
        s = 0.0
        for k in range(o):
            e = math.exp(logits[k] - m)
            P[t, k] = e
            s += e
        for k in range(o):
            P[t, k] /= s
        if has_targets:
            nll[t] = (m + math.log(s)) - logits[tgt_idx[t]]
    else:
        acc = 0.0
        for k in range(o):
            l = logits[k]
            P[t, k] = 1.0 / (1.0 + math.exp(-l))
            if has_targets:
                if l > 0.0:
                    sp = l + math.log1p(math.exp(-l))
                else:
                    sp = math.log1p(math.exp(l))
                acc += sp - tgt_dense[t, k] * l
        if has_targets:
            nll[t] = acc


@njit(cache=True, inline="always")
def _matvec_T(W, v, out):
    # out = W @ v, i.e. v @ W^T; each component is one contiguous dot.
    for i in range(W.shape[0]):
        acc = 0.0
        for j in range(W.shape[1]):
            acc += W[i, j] * v[j]
        out[i] = acc


@njit(cache=True)
def trans_bwd_rnn(H, W, nl, dHout):
    T, n = H.shape
    dPre = np.empty((T, n))
    carry = np.zeros(n)
    dh = np.empty(n)
    for t in range(T - 1, -1, -1):
        for j in range(n):
            dh[j] = dHout[t, j] + carry[j]
            dPre[t, j] = dh[j] * _dact(nl, H[t, j])
        _matvec_T(W, dPre[t], carry)
    return dPre


@njit(cache=True)
def trans_bwd_dt(Z, H, W1, W2, Sh, use_sc, nl1, nl, dHout):
    T, n = H.shape
    m = Z.shape[1]
    dPre1 = np.empty((T, m))
    dPre2 = np.empty((T, n))
    carry = np.zeros(n)
    tmp = np.empty(n)
    dz = np.empty(m)
    for t in range(T - 1, -1, -1):
        for j in range(n):
            dPre2[t, j] = (dHout[t, j] + carry[j]) * _dact(nl, H[t, j])
        _matvec_T(W2, dPre2[t], dz)
        for j in range(m):
            dPre1[t, j] = dz[j] * _dact(nl1, Z[t, j])
        _matvec_T(W1, dPre1[t], carry)
        if use_sc:
            _matvec_T(Sh, dPre2[t], tmp)
            for j in range(n):
                carry[j] += tmp[j]
    return dPre1, dPre2


@njit(cache=True)
def trans_bwd_srnn(H, W, Urest, nl, dHtop):
    L, T, n = H.shape
    dPre = np.empty((L, T, n))
    carry = np.zeros((L, n))
    dh = np.empty(n)
    up = np.empty(n)
    for t in range(T - 1, -1, -1):
        for l in range(L - 1, -1, -1):
            for j in range(n):
                dh[j] = carry[l, j]
            if l == L - 1:
                for j in range(n):
                    dh[j] += dHtop[t, j]
            else:
                _matvec_T(Urest[l], dPre[l + 1, t], up)
                for j in range(n):
                    dh[j] += up[j]
            for j in range(n):
                dPre[l, t, j] = dh[j] * _dact(nl, H[l, t, j])
            _matvec_T(W[l], dPre[l, t], carry[l])
    return dPre


EMPTY_DENSE = np.empty((0, 0), dtype=np.float64)
EMPTY_IDX = np.empty(0, dtype=np.int64)
