"""Dense float64 array primitives and seeded randomness.

Every other module passes around plain 2-D numpy arrays ("matrices"):
row-major, float dtype, shape (rows, cols). The helpers here add the shape
checking and numerical guarantees the rest of the package relies on:

- sigmoid outputs are strictly inside (0, 1) so Bernoulli entropies are
  always finite,
- softmax rows sum to 1 to within 1e-12,
- all randomness flows through `Rng`, a named deterministic generator
  (PCG64), so identical seeds reproduce identical streams.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf as _erf

# Arguments to exp() are clamped to this magnitude inside sigmoid() so the
# output can never round to exactly 0.0 or 1.0 (which would make Bernoulli
# entropy a log(0) hazard downstream).
SIGMOID_CLAMP = 36.0


class DimensionError(ValueError):
    """Raised when matrix shapes do not line up for an operation."""


def check_matrix(x, name="matrix"):
    """Validate that `x` is a 2-D float array; return it unchanged."""
    if not isinstance(x, np.ndarray) or x.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D array, got {getattr(x, 'shape', type(x))}")
    if not np.issubdtype(x.dtype, np.floating):
        raise DimensionError(f"{name} must have a float dtype, got {x.dtype}")
    return x


def matrix(values) -> np.ndarray:
    """Build a row-major float64 matrix from nested lists or an array."""
    return np.asarray(values, dtype=np.float64).reshape(np.shape(values)[:2] or (1, 1))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit shape check.

    Backed by numpy's BLAS-accelerated `@`; accumulation is float64
    (or float32 if both operands are float32, used only by the flagged
    benchmark paths).
    """
    check_matrix(a, "left operand")
    check_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"matmul shape mismatch: {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Elementwise 1/(1+exp(-x)), strictly inside (0, 1).

    The argument is clamped to +/-SIGMOID_CLAMP before exponentiation, so
    sigmoid(+1000) returns a value < 1 (about 1 - 2.2e-16) rather than
    exactly 1.
    """
    z = np.clip(x, -SIGMOID_CLAMP, SIGMOID_CLAMP)
    return 1.0 / (1.0 + np.exp(-z))


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_grad(pre: np.ndarray) -> np.ndarray:
    """Derivative of relu at pre-activation `pre` (0 at the kink)."""
    return (pre > 0.0).astype(pre.dtype)


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact Gaussian-error gelu: x * Phi(x)."""
    return 0.5 * x * (1.0 + _erf(x / np.sqrt(2.0)))


def gelu_grad(pre: np.ndarray) -> np.ndarray:
    phi = np.exp(-0.5 * pre * pre) / np.sqrt(2.0 * np.pi)
    cdf = 0.5 * (1.0 + _erf(pre / np.sqrt(2.0)))
    return cdf + pre * phi


def softplus(x: np.ndarray) -> np.ndarray:
    """Numerically stable ln(1 + exp(x))."""
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-shift stabilization; rows sum to 1."""
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


# activation name -> (function, derivative-at-preactivation)
ACTIVATIONS = {
    "relu": (relu, relu_grad),
    "gelu": (gelu, gelu_grad),
    "none": (lambda x: x, lambda pre: np.ones_like(pre)),
}


def activation_pair(name: str):
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; expected one of {sorted(ACTIVATIONS)}")


class Rng:
    """Seeded deterministic random stream (numpy PCG64).

    Identical seeds produce identical streams across runs and platforms;
    numpy's PCG64 bit-stream is stable for a fixed seed. An Rng is
    single-owner: share the seed, not the object, across threads.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, low: float, high: float, size) -> np.ndarray:
        return self._gen.uniform(low, high, size=size)

    def normal(self, size) -> np.ndarray:
        return self._gen.standard_normal(size=size)

    def integers(self, high: int, size=None):
        return self._gen.integers(0, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def bytes(self, n: int) -> bytes:
        return self._gen.bytes(n)

    def split(self) -> "Rng":
        """Derive an independent child stream, deterministically."""
        child_seed = int(self._gen.integers(0, 2**63 - 1))
        return Rng(child_seed)

    def __repr__(self):
        return f"Rng(seed={self.seed}, algorithm=PCG64)"


def gaussian_noise(rng: Rng, rows: int, cols: int) -> np.ndarray:
    """Standard-normal matrix of the given shape from `rng`."""
    return rng.normal((rows, cols))
