"""Shared construction and oracle helpers for the test suite."""

from __future__ import annotations

import numpy as np

from fffkit.fff import FffConfig, FffParams, forward_train


def spread_node_logits(
    params: FffParams, config: FffConfig, pool: np.ndarray, target_std: float
) -> FffParams:
    """Rescale each node head so its logit std over `pool` hits target_std.

    Uniform head rescaling squashes a node's sigmoid toward a step without
    moving its boundary; equalizing the per-node logit spread first makes
    margin filtering on a probe pool meaningful for every node at once.
    """
    _, trace = forward_train(params, config, pool)
    logits = np.log(trace.node_choices) - np.log1p(-trace.node_choices)
    factors = target_std / (logits.std(axis=1) + 1e-12)
    out = params.copy()
    out.node_head_w *= factors[:, None]
    out.node_head_b *= factors
    return out


def relative_error(analytic: float, numeric: float, floor: float = 1e-3) -> float:
    """Gradient-check relative error with a small-magnitude floor.

    Central differences at step 1e-6 in float64 carry roughly 1e-9 of
    absolute noise, so components smaller than `floor` are compared
    absolutely (|a - f| <= tol * floor) rather than relatively.
    """
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def central_difference(objective, arrays: list[np.ndarray], step: float = 1e-6):
    """Central finite differences of a scalar objective over parameter arrays.

    `objective` is re-evaluated with one entry perturbed at a time; arrays
    are modified in place and restored, so `objective` must read them fresh
    on every call.
    """
    grads = [np.zeros_like(a) for a in arrays]
    for arr, grad in zip(arrays, grads):
        flat = arr.reshape(-1)
        flat_grad = grad.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            up = objective()
            flat[i] = keep - step
            down = objective()
            flat[i] = keep
            flat_grad[i] = (up - down) / (2.0 * step)
    return grads


def max_gradcheck_error(analytic: list[np.ndarray], numeric: list[np.ndarray]) -> float:
    worst = 0.0
    for a, f in zip(analytic, numeric):
        for x, y in zip(a.reshape(-1), f.reshape(-1)):
            worst = max(worst, relative_error(float(x), float(y)))
    return worst
