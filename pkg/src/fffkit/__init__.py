"""Log-time conditional feedforward layers and their baselines.

The package is organized by capability:

- `tensor`: float64 matrix helpers and the seeded PCG64 random stream.
- `fff`: the tree-routed layer (soft training forward, hard log-time
  inference forward, hand-derived backward, hardening penalty and entropy
  telemetry, size/MAC bookkeeping).
- `baselines`: the plain feedforward block and the noisy top-k
  mixture-of-experts layer it is compared against.
- `data` / `training`: dataset loading (IDX, CSV, synthetic tasks),
  splitting, optimizers, and the train/evaluate harness with
  memorization/generalization accuracy bookkeeping.
- `bench`: wall-clock and instrumented MAC benchmarking of the inference
  paths.
- `modelfile`: versioned, CRC-checked binary serialization of any layer.
- `cli`: the `fffkit` command (train / eval / bench / entropy).
"""

from .fff import (
    EntropySnapshot,
    FffConfig,
    FffForwardTrace,
    FffGradients,
    FffParams,
    backward,
    entropy_snapshot,
    fff_init,
    fff_sizes,
    flop_count_infer,
    flop_count_train,
    forward_infer,
    forward_train,
    hardening_loss,
    is_hardened,
    scale_node_heads,
)
from .tensor import DimensionError, Rng, gaussian_noise, matmul, relu, sigmoid, softmax_rows, softplus

__version__ = "0.1.0"

__all__ = [
    "DimensionError",
    "EntropySnapshot",
    "FffConfig",
    "FffForwardTrace",
    "FffGradients",
    "FffParams",
    "Rng",
    "backward",
    "entropy_snapshot",
    "fff_init",
    "fff_sizes",
    "flop_count_infer",
    "flop_count_train",
    "forward_infer",
    "forward_train",
    "gaussian_noise",
    "hardening_loss",
    "is_hardened",
    "matmul",
    "relu",
    "scale_node_heads",
    "sigmoid",
    "softmax_rows",
    "softplus",
    "__version__",
]
