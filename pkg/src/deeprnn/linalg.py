"""Dense linear algebra primitives used throughout the library.

Matrices and vectors are plain float64 numpy arrays: a matrix is 2-D and
row-major, a vector is 1-D. Weight matrices are stored fan_in x fan_out, so a
layer application reads ``x @ M``. All public operations validate shapes and
raise :class:`ConfigurationError` on mismatch.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import ConfigurationError, NumericError
from .rng import Rng


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ConfigurationError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def as_vector(a, name: str = "vector") -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise ConfigurationError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


def affine(W: np.ndarray, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """W @ x + b for an (out x in) matrix, an (in,) vector and an (out,) bias."""
    W = as_matrix(W, "W")
    x = as_vector(x, "x")
    b = as_vector(b, "b")
    if W.shape[1] != x.shape[0] or W.shape[0] != b.shape[0]:
        raise ConfigurationError(
            f"affine shape mismatch: W is {W.shape[0]}x{W.shape[1]}, "
            f"x has dim {x.shape[0]}, b has dim {b.shape[0]}")
    return W @ x + b


class Nonlinearity(Enum):
    """Element-wise activation functions.

    The integer values double as dispatch codes for the compiled kernels.
    """

    SIGMOID = 0
    TANH = 1
    RECTIFIER = 2
    IDENTITY = 3

    @classmethod
    def from_name(cls, name: str) -> "Nonlinearity":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ConfigurationError(
                f"unknown nonlinearity {name!r}; expected one of "
                f"{[m.name.lower() for m in cls]}") from None

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return apply(self, v)

    def derivative_from_output(self, y: np.ndarray) -> np.ndarray:
        """Derivative expressed through the activation value itself."""
        if self is Nonlinearity.SIGMOID:
            return y * (1.0 - y)
        if self is Nonlinearity.TANH:
            return 1.0 - y * y
        if self is Nonlinearity.RECTIFIER:
            return (y > 0.0).astype(np.float64)
        return np.ones_like(y)


def apply(nl: Nonlinearity, v: np.ndarray) -> np.ndarray:
    """Apply a nonlinearity element-wise; output has the input's shape."""
    v = np.asarray(v, dtype=np.float64)
    if nl is Nonlinearity.SIGMOID:
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.exp(-v))
    if nl is Nonlinearity.TANH:
        return np.tanh(v)
    if nl is Nonlinearity.RECTIFIER:
        return np.maximum(v, 0.0)
    return v.copy()


def softmax(v: np.ndarray) -> np.ndarray:
    """Softmax with max-subtraction; entries are positive and sum to 1."""
    v = as_vector(v, "softmax input")
    e = np.exp(v - v.max())
    return e / e.sum()


def gaussian_matrix(rng: Rng, rows: int, cols: int, std: float) -> np.ndarray:
    """(rows x cols) matrix of i.i.d. N(0, std^2) entries."""
    if std < 0:
        raise ConfigurationError(f"gaussian std must be >= 0, got {std}")
    return rng.normal((rows, cols), std)


def largest_singular_value(M: np.ndarray, tol: float = 1e-6,
                           max_iter: int = 1000, name: str = "matrix") -> float:
    """Largest singular value via power iteration on M^T M.

    The start vector is drawn from a fixed-seed stream so results are
    deterministic. Successive estimates converge linearly; the loop stops once
    an Aitken-style bound puts the remaining relative error below ``tol``.
    """
    M = as_matrix(M, name)
    if not np.any(M):
        raise ConfigurationError(f"{name} is all zeros; singular values undefined for rescaling")
    # Random (but fixed) start avoids starting orthogonal to the top singular vector.
    v = Rng(0x5EED, 1).normal(M.shape[1])
    v /= np.linalg.norm(v)
    sigma_prev = 0.0
    delta_prev = np.inf
    for _ in range(max_iter):
        w = M.T @ (M @ v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            raise ConfigurationError(f"{name}: power iteration start lies in the null space")
        v = w / norm_w
        sigma = float(np.linalg.norm(M @ v))
        delta = abs(sigma - sigma_prev)
        if delta == 0.0:
            return sigma
        if np.isfinite(delta_prev) and delta_prev > 0.0:
            ratio = min(delta / delta_prev, 0.999)
            # Geometric tail bound on the remaining error, with safety margin.
            if 4.0 * delta * ratio / (1.0 - ratio) <= tol * sigma:
                return sigma
        sigma_prev = sigma
        delta_prev = delta
    raise NumericError(
        f"power iteration for {name} ({M.shape[0]}x{M.shape[1]}) did not "
        f"converge to tol={tol} within {max_iter} iterations")
