"""Tree-routed conditional feedforward layer.

A layer of depth d keeps 2^d - 1 tiny "node" networks arranged as a
balanced binary tree and 2^d "leaf" feedforward blocks. Each node network
ends in a sigmoid and emits, per sample, the probability of taking the
right branch. Training mixes all leaf outputs, weighting each leaf by the
product of branch probabilities along its root-to-leaf path; inference
descends the tree taking one hard decision per level and evaluates a
single leaf, so the per-sample cost is d node networks plus one leaf block
instead of all 2^d of them.

Node and leaf parameter stacks are indexed in level order: the children of
node t are 2t+1 (left) and 2t+2 (right), the root is 0, and leaf j sits at
tree position (2^d - 1) + j. Branch probability c weights the RIGHT child;
1 - c weights the left.

Everything here is a pure function of its inputs; parameter containers are
treated as immutable and `forward_infer` may be called concurrently from
many threads. The backward pass is hand-derived (no autodiff), which is
what makes the finite-difference checks in the test suite meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tensor import DimensionError, Rng, activation_pair, check_matrix, sigmoid

LN2 = math.log(2.0)


class TraceMismatchError(RuntimeError):
    """Raised when a backward pass is fed a trace from a different forward."""


@dataclass(frozen=True)
class FffConfig:
    """Shape and training hyperparameters of one tree-routed layer.

    depth may be 0 (a plain feedforward block, no tree). node_size is the
    hidden width of each node network; with node_size == 1 the node is a
    linear neuron plus head sigmoid and `node_hidden_activation` is
    ignored (the decision boundary is then the neuron's activation plane).
    transpose_prob is the per-node probability, during training only, of
    swapping a node's (1-p, p) pair to expose each subtree to the
    neighboring region's data; it must stay well below a coin flip.
    """

    dim_in: int
    dim_out: int
    depth: int
    leaf_size: int
    node_size: int = 1
    hardening_coeff: float = 0.0
    transpose_prob: float = 0.05
    entropy_base: str = "bits"  # "bits" or "nats"
    leaf_activation: str = "relu"  # "relu", "gelu", or "none"
    node_hidden_activation: str = "relu"  # "relu" or "none"; unused when node_size == 1

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")
        for name in ("dim_in", "dim_out", "leaf_size", "node_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.hardening_coeff < 0:
            raise ValueError("hardening_coeff must be >= 0")
        if not 0.0 <= self.transpose_prob < 0.5:
            raise ValueError(
                f"transpose_prob must lie in [0, 0.5), got {self.transpose_prob}; "
                "it is a perturbation, not a coin flip"
            )
        if self.entropy_base not in ("bits", "nats"):
            raise ValueError(f"entropy_base must be 'bits' or 'nats', got {self.entropy_base!r}")
        if self.leaf_activation not in ("relu", "gelu", "none"):
            raise ValueError(f"bad leaf_activation {self.leaf_activation!r}")
        if self.node_hidden_activation not in ("relu", "none"):
            raise ValueError(f"bad node_hidden_activation {self.node_hidden_activation!r}")

    @property
    def num_nodes(self) -> int:
        return 2**self.depth - 1

    @property
    def num_leaves(self) -> int:
        return 2**self.depth

    def node_activation_name(self) -> str:
        # Single-neuron nodes are linear + head sigmoid only.
        return "none" if self.node_size == 1 else self.node_hidden_activation


@dataclass
class FffParams:
    """Stacked node and leaf network parameters, level-order along axis 0.

    Node t: hidden weights node_hidden_w[t] (dim_in x n), hidden bias
    node_hidden_b[t] (n,), head weights node_head_w[t] (n,), head bias
    node_head_b[t] (scalar). Leaf j: leaf_w1[j] (dim_in x leaf_size),
    leaf_b1[j], leaf_w2[j] (leaf_size x dim_out), leaf_b2[j].
    """

    node_hidden_w: np.ndarray  # (num_nodes, dim_in, node_size)
    node_hidden_b: np.ndarray  # (num_nodes, node_size)
    node_head_w: np.ndarray  # (num_nodes, node_size)
    node_head_b: np.ndarray  # (num_nodes,)
    leaf_w1: np.ndarray  # (num_leaves, dim_in, leaf_size)
    leaf_b1: np.ndarray  # (num_leaves, leaf_size)
    leaf_w2: np.ndarray  # (num_leaves, leaf_size, dim_out)
    leaf_b2: np.ndarray  # (num_leaves, dim_out)

    def arrays(self) -> list[np.ndarray]:
        """All parameter arrays in serialization/optimizer order."""
        return [
            self.node_hidden_w,
            self.node_hidden_b,
            self.node_head_w,
            self.node_head_b,
            self.leaf_w1,
            self.leaf_b1,
            self.leaf_w2,
            self.leaf_b2,
        ]

    def copy(self) -> "FffParams":
        return FffParams(*(a.copy() for a in self.arrays()))


@dataclass
class FffGradients:
    """Parameter gradients, mirroring the FffParams layout."""

    node_hidden_w: np.ndarray
    node_hidden_b: np.ndarray
    node_head_w: np.ndarray
    node_head_b: np.ndarray
    leaf_w1: np.ndarray
    leaf_b1: np.ndarray
    leaf_w2: np.ndarray
    leaf_b2: np.ndarray

    def arrays(self) -> list[np.ndarray]:
        return [
            self.node_hidden_w,
            self.node_hidden_b,
            self.node_head_w,
            self.node_head_b,
            self.leaf_w1,
            self.leaf_b1,
            self.leaf_w2,
            self.leaf_b2,
        ]


@dataclass
class FffForwardTrace:
    """Everything the backward pass needs from one training forward.

    node_choices[t, b] is the sigmoid output c of node t for sample b
    (before any transposition). pos_probs[q, b] is the probability of
    sample b reaching tree position q (root = 1); the last 2^d rows are
    the leaf mixture. transposed_mask[t] records which nodes had their
    (1-p, p) pair swapped on this pass.
    """

    node_choices: np.ndarray  # (num_nodes, B)
    node_hidden_pre: np.ndarray  # (num_nodes, B, node_size)
    node_hidden_act: np.ndarray  # (num_nodes, B, node_size)
    pos_probs: np.ndarray  # (2^(d+1) - 1, B)
    leaf_hidden_pre: np.ndarray  # (num_leaves, B, leaf_size)
    leaf_hidden_act: np.ndarray  # (num_leaves, B, leaf_size)
    leaf_outputs: np.ndarray  # (num_leaves, B, dim_out)
    transposed_mask: np.ndarray  # (num_nodes,) bool
    batch_id: int = field(repr=False, default=0)
    params_id: int = field(repr=False, default=0)

    @property
    def leaf_mixture(self) -> np.ndarray:
        """Per-sample stochastic vector over leaves, shape (B, num_leaves)."""
        num_leaves = (self.pos_probs.shape[0] + 1) // 2
        return self.pos_probs[num_leaves - 1 :].T

    @property
    def effective_choices(self) -> np.ndarray:
        """Right-branch probabilities actually used for mixing (post swap)."""
        mask = self.transposed_mask[:, None]
        return np.where(mask, 1.0 - self.node_choices, self.node_choices)


def fff_init(config: FffConfig, rng: Rng) -> FffParams:
    """Draw fresh parameters: scaled-uniform weights, zero biases.

    Weights are U(-b, b) with b = sqrt(1/fan_in) per weight matrix; node
    head weights are additionally scaled by 0.1 so that early choices sit
    near 0.5 and boundaries can harden progressively. Draw order is fixed
    (all nodes level by level, then all leaves), so a seed pins the
    parameters bit-for-bit.
    """
    d_in, n, ell, d_out = config.dim_in, config.node_size, config.leaf_size, config.dim_out
    num_nodes, num_leaves = config.num_nodes, config.num_leaves

    hidden_bound = math.sqrt(1.0 / d_in)
    head_bound = math.sqrt(1.0 / n)
    node_hidden_w = np.empty((num_nodes, d_in, n))
    node_head_w = np.empty((num_nodes, n))
    for t in range(num_nodes):
        node_hidden_w[t] = rng.uniform(-hidden_bound, hidden_bound, (d_in, n))
        node_head_w[t] = 0.1 * rng.uniform(-head_bound, head_bound, (n,))

    w1_bound = math.sqrt(1.0 / d_in)
    w2_bound = math.sqrt(1.0 / ell)
    leaf_w1 = np.empty((num_leaves, d_in, ell))
    leaf_w2 = np.empty((num_leaves, ell, d_out))
    for j in range(num_leaves):
        leaf_w1[j] = rng.uniform(-w1_bound, w1_bound, (d_in, ell))
        leaf_w2[j] = rng.uniform(-w2_bound, w2_bound, (ell, d_out))

    return FffParams(
        node_hidden_w=node_hidden_w,
        node_hidden_b=np.zeros((num_nodes, n)),
        node_head_w=node_head_w,
        node_head_b=np.zeros(num_nodes),
        leaf_w1=leaf_w1,
        leaf_b1=np.zeros((num_leaves, ell)),
        leaf_w2=leaf_w2,
        leaf_b2=np.zeros((num_leaves, d_out)),
    )


def _check_batch(config: FffConfig, batch: np.ndarray):
    check_matrix(batch, "batch")
    if batch.shape[1] != config.dim_in:
        raise DimensionError(
            f"batch is {batch.shape[0]}x{batch.shape[1]} but the layer expects "
            f"{config.dim_in} input columns"
        )


def _node_choices(params: FffParams, config: FffConfig, batch: np.ndarray, lo: int, hi: int):
    """Evaluate node networks lo..hi (one tree level) on the whole batch."""
    act, _ = activation_pair(config.node_activation_name())
    pre = (
        np.einsum("bd,tdn->tbn", batch, params.node_hidden_w[lo:hi])
        + params.node_hidden_b[lo:hi, None, :]
    )
    hidden = act(pre)
    logits = (
        np.einsum("tbn,tn->tb", hidden, params.node_head_w[lo:hi])
        + params.node_head_b[lo:hi, None]
    )
    return pre, hidden, sigmoid(logits)


def _leaf_outputs(params: FffParams, config: FffConfig, batch: np.ndarray):
    """Evaluate every leaf block on the whole batch in one pass."""
    act, _ = activation_pair(config.leaf_activation)
    if config.depth == 0:
        # Plain 2-D matmuls so a depth-0 layer is bit-identical to the
        # standalone feedforward block (einsum accumulates differently).
        pre = (batch @ params.leaf_w1[0] + params.leaf_b1[0])[None]
        hidden = act(pre)
        out = (hidden[0] @ params.leaf_w2[0] + params.leaf_b2[0])[None]
        return pre, hidden, out
    pre = np.einsum("bd,ldh->lbh", batch, params.leaf_w1) + params.leaf_b1[:, None, :]
    hidden = act(pre)
    out = np.einsum("lbh,lho->lbo", hidden, params.leaf_w2) + params.leaf_b2[:, None, :]
    return pre, hidden, out


def forward_train(
    params: FffParams,
    config: FffConfig,
    batch: np.ndarray,
    rng: Rng | None = None,
    transpose_mask: np.ndarray | None = None,
) -> tuple[np.ndarray, FffForwardTrace]:
    """Soft (mixture) forward pass over a batch.

    Descends the tree level by level, turning each node's sigmoid output
    into a right-branch probability and accumulating per-leaf path
    probabilities, then evaluates all leaves in one batched pass and mixes
    them. With transpose_prob > 0 each node's (1-p, p) pair is
    independently swapped with that probability before mixing (training
    regularization; never applied at inference). `transpose_mask`
    overrides the random draw, which the gradient tests use to pin a
    specific swap pattern.

    Returns the mixed output (B x dim_out) and the trace consumed by
    `backward`.
    """
    _check_batch(config, batch)
    batch_size = batch.shape[0]
    depth, num_nodes, num_leaves = config.depth, config.num_nodes, config.num_leaves

    if transpose_mask is not None:
        mask = np.asarray(transpose_mask, dtype=bool)
        if mask.shape != (num_nodes,):
            raise DimensionError(f"transpose_mask must have shape ({num_nodes},)")
    elif config.transpose_prob > 0.0 and num_nodes > 0 and rng is not None:
        mask = rng.uniform(0.0, 1.0, num_nodes) < config.transpose_prob
    else:
        mask = np.zeros(num_nodes, dtype=bool)

    dtype = batch.dtype
    choices = np.empty((num_nodes, batch_size), dtype=dtype)
    hidden_pre = np.empty((num_nodes, batch_size, config.node_size), dtype=dtype)
    hidden_act = np.empty_like(hidden_pre)
    pos_probs = np.empty((2 * num_leaves - 1, batch_size), dtype=dtype)
    pos_probs[0] = 1.0

    for level in range(depth):
        lo, hi = 2**level - 1, 2 ** (level + 1) - 1
        pre, hid, c = _node_choices(params, config, batch, lo, hi)
        hidden_pre[lo:hi] = pre
        hidden_act[lo:hi] = hid
        choices[lo:hi] = c
        p_right = np.where(mask[lo:hi, None], 1.0 - c, c)
        parent = pos_probs[lo:hi]
        pos_probs[2 * lo + 1 : 2 * hi : 2] = parent * (1.0 - p_right)
        pos_probs[2 * lo + 2 : 2 * hi + 1 : 2] = parent * p_right

    leaf_pre, leaf_hidden, leaf_out = _leaf_outputs(params, config, batch)
    if depth == 0:
        # Single leaf, unit mixture: return its output without a weighting
        # pass so a depth-0 layer is bit-identical to the plain block.
        output = leaf_out[0].copy()
    else:
        mixture = pos_probs[num_leaves - 1 :]  # (num_leaves, B)
        output = np.einsum("lb,lbo->bo", mixture, leaf_out)

    trace = FffForwardTrace(
        node_choices=choices,
        node_hidden_pre=hidden_pre,
        node_hidden_act=hidden_act,
        pos_probs=pos_probs,
        leaf_hidden_pre=leaf_pre,
        leaf_hidden_act=leaf_hidden,
        leaf_outputs=leaf_out,
        transposed_mask=mask,
        batch_id=id(batch),
        params_id=id(params),
    )
    return output, trace


def forward_train_reference(
    params: FffParams, config: FffConfig, sample: np.ndarray
) -> np.ndarray:
    """Recursive single-sample mixture forward, for cross-checking.

    Walks the tree top-down exactly as the recursive definition reads:
    at a leaf return the leaf output; at a node return
    c * forward(right) + (1 - c) * forward(left). Slow and independent of
    the level-loop implementation above; no transpositions.
    """
    x = sample.reshape(1, -1)
    node_act, _ = activation_pair(config.node_activation_name())
    leaf_act, _ = activation_pair(config.leaf_activation)
    first_leaf = config.num_nodes

    def descend(pos: int) -> np.ndarray:
        if pos >= first_leaf:
            j = pos - first_leaf
            hidden = leaf_act(x @ params.leaf_w1[j] + params.leaf_b1[j])
            return hidden @ params.leaf_w2[j] + params.leaf_b2[j]
        hidden = node_act(x @ params.node_hidden_w[pos] + params.node_hidden_b[pos])
        c = sigmoid(hidden @ params.node_head_w[pos][:, None] + params.node_head_b[pos])[0, 0]
        return c * descend(2 * pos + 2) + (1.0 - c) * descend(2 * pos + 1)

    return descend(0)[0]


def forward_infer(
    params: FffParams, config: FffConfig, batch: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Hard-routed forward pass: one node per level, one leaf per sample.

    At each level the per-sample node parameters are gathered by index
    and a single batched multiply-accumulate produces the head logits;
    the branch test is `logit >= 0`, i.e. choice score >= 1/2, with ties
    going right. Returns (output, leaf_index).
    """
    _check_batch(config, batch)
    batch_size = batch.shape[0]
    node_act, _ = activation_pair(config.node_activation_name())
    leaf_act, _ = activation_pair(config.leaf_activation)

    offset = np.zeros(batch_size, dtype=np.intp)  # per-sample offset within the level
    for level in range(config.depth):
        flat = (2**level - 1) + offset
        pre = (
            np.einsum("bd,bdn->bn", batch, params.node_hidden_w[flat])
            + params.node_hidden_b[flat]
        )
        hidden = node_act(pre)
        logits = np.einsum("bn,bn->b", hidden, params.node_head_w[flat]) + params.node_head_b[flat]
        offset = 2 * offset + (logits >= 0.0)

    leaf_index = offset
    output = np.empty((batch_size, config.dim_out), dtype=batch.dtype)
    order = np.argsort(leaf_index, kind="stable")
    sorted_leaves = leaf_index[order]
    boundaries = np.flatnonzero(np.diff(sorted_leaves)) + 1
    for group in np.split(order, boundaries):
        j = leaf_index[group[0]]
        hidden = leaf_act(batch[group] @ params.leaf_w1[j] + params.leaf_b1[j])
        output[group] = hidden @ params.leaf_w2[j] + params.leaf_b2[j]
    return output, leaf_index


def backward(
    params: FffParams,
    config: FffConfig,
    trace: FffForwardTrace,
    batch: np.ndarray,
    output_grad: np.ndarray,
    choice_grad: np.ndarray | None = None,
) -> FffGradients:
    """Analytic gradients of <output_grad, output> w.r.t. every parameter.

    `choice_grad` (num_nodes x B), if given, is an extra objective
    gradient with respect to the raw choice scores c — this is how the
    hardening penalty's contribution merges in. Gradients flow through
    whatever mixture the forward actually computed: a transposed node
    contributes -d/dp to c instead of +d/dp.

    The node-score gradients are assembled in two tree sweeps: a
    bottom-up pass folds per-leaf responses s_j = <output_grad, leaf_j>
    into per-subtree responses, then each node's gradient is its
    path-reach probability times the right-minus-left subtree response
    difference.
    """
    _check_batch(config, batch)
    if trace.batch_id != id(batch) or trace.params_id != id(params):
        raise TraceMismatchError(
            "trace was produced by a different forward_train call (params or batch differ)"
        )
    check_matrix(output_grad, "output_grad")
    batch_size = batch.shape[0]
    if output_grad.shape != (batch_size, config.dim_out):
        raise DimensionError(
            f"output_grad is {output_grad.shape}, expected ({batch_size}, {config.dim_out})"
        )

    depth, num_nodes, num_leaves = config.depth, config.num_nodes, config.num_leaves
    _, node_act_grad = activation_pair(config.node_activation_name())
    _, leaf_act_grad = activation_pair(config.leaf_activation)

    # Leaf parameter gradients: each leaf sees output_grad scaled by its
    # mixture weight.
    if depth == 0:
        # 2-D matmul path, mirroring the plain feedforward backward exactly.
        d_leaf_w2 = (trace.leaf_hidden_act[0].T @ output_grad)[None]
        d_leaf_b2 = output_grad.sum(axis=0)[None]
        d_h0 = (output_grad @ params.leaf_w2[0].T) * leaf_act_grad(trace.leaf_hidden_pre[0])
        d_leaf_w1 = (batch.T @ d_h0)[None]
        d_leaf_b1 = d_h0.sum(axis=0)[None]
    else:
        mixture = trace.pos_probs[num_leaves - 1 :]  # (num_leaves, B)
        upstream = mixture[:, :, None] * output_grad[None, :, :]  # (L, B, O)
        d_leaf_w2 = np.einsum("lbh,lbo->lho", trace.leaf_hidden_act, upstream)
        d_leaf_b2 = upstream.sum(axis=1)
        d_hidden = np.einsum("lbo,lho->lbh", upstream, params.leaf_w2) * leaf_act_grad(
            trace.leaf_hidden_pre
        )
        d_leaf_w1 = np.einsum("bd,lbh->ldh", batch, d_hidden)
        d_leaf_b1 = d_hidden.sum(axis=1)

    grads = FffGradients(
        node_hidden_w=np.zeros_like(params.node_hidden_w),
        node_hidden_b=np.zeros_like(params.node_hidden_b),
        node_head_w=np.zeros_like(params.node_head_w),
        node_head_b=np.zeros_like(params.node_head_b),
        leaf_w1=d_leaf_w1,
        leaf_b1=d_leaf_b1,
        leaf_w2=d_leaf_w2,
        leaf_b2=d_leaf_b2,
    )
    if num_nodes == 0:
        return grads

    # Per-leaf response to the objective, then fold bottom-up:
    # response(node) = (1-p)*response(left) + p*response(right).
    response = np.empty_like(trace.pos_probs)
    response[num_nodes:] = np.einsum("bo,lbo->lb", output_grad, trace.leaf_outputs)
    p_right = trace.effective_choices
    d_p_right = np.empty((num_nodes, batch_size), dtype=batch.dtype)
    for level in reversed(range(depth)):
        lo, hi = 2**level - 1, 2 ** (level + 1) - 1
        left = response[2 * lo + 1 : 2 * hi : 2]
        right = response[2 * lo + 2 : 2 * hi + 1 : 2]
        d_p_right[lo:hi] = trace.pos_probs[lo:hi] * (right - left)
        response[lo:hi] = (1.0 - p_right[lo:hi]) * left + p_right[lo:hi] * right

    d_choice = np.where(trace.transposed_mask[:, None], -d_p_right, d_p_right)
    if choice_grad is not None:
        d_choice = d_choice + choice_grad

    c = trace.node_choices
    d_logits = d_choice * c * (1.0 - c)  # (num_nodes, B)
    grads.node_head_w[:] = np.einsum("tbn,tb->tn", trace.node_hidden_act, d_logits)
    grads.node_head_b[:] = d_logits.sum(axis=1)
    d_node_hidden = d_logits[:, :, None] * params.node_head_w[:, None, :]
    d_node_hidden = d_node_hidden * node_act_grad(trace.node_hidden_pre)
    grads.node_hidden_w[:] = np.einsum("bd,tbn->tdn", batch, d_node_hidden)
    grads.node_hidden_b[:] = d_node_hidden.sum(axis=1)
    return grads


def _entropy(choices: np.ndarray, base: str) -> np.ndarray:
    """Elementwise Bernoulli entropy of choice scores, in bits or nats.

    Choice scores from `sigmoid` are strictly inside (0, 1), so the logs
    are finite by construction.
    """
    h = -(choices * np.log(choices) + (1.0 - choices) * np.log1p(-choices))
    return h / LN2 if base == "bits" else h


def hardening_loss(
    trace: FffForwardTrace, config: FffConfig
) -> tuple[float, np.ndarray]:
    """Entropy penalty pushing node decisions toward 0/1, plus its gradient.

    Returns h * mean-over-samples of the per-sample sum of node
    entropies, and the matching gradient with respect to each raw choice
    score (num_nodes x B), ready to pass to `backward` as `choice_grad`.
    The batch mean (rather than the batch sum) keeps the coefficient h
    transferable across batch sizes; the raw-sum behavior is recovered by
    scaling h by the batch size.
    """
    h_coeff = config.hardening_coeff
    if trace.node_choices.size == 0:
        return 0.0, np.zeros_like(trace.node_choices)
    batch_size = trace.node_choices.shape[1]
    entropies = _entropy(trace.node_choices, config.entropy_base)
    loss = h_coeff * float(entropies.sum()) / batch_size
    c = trace.node_choices
    # dH/dc = log((1-c)/c), in the configured base.
    grad = np.log1p(-c) - np.log(c)
    if config.entropy_base == "bits":
        grad = grad / LN2
    grad = grad * (h_coeff / batch_size)
    return loss, grad


@dataclass(frozen=True)
class EntropySnapshot:
    """Batch-mean Bernoulli entropy of every node's choices at one epoch."""

    per_node_mean_entropy: np.ndarray  # (num_nodes,)
    overall_mean: float
    epoch: int
    base: str = "bits"


def entropy_snapshot(trace: FffForwardTrace, config: FffConfig, epoch: int) -> EntropySnapshot:
    """Per-node batch-mean entropy of the choice scores in `trace`."""
    if trace.node_choices.size == 0:
        return EntropySnapshot(np.zeros(0), 0.0, epoch, config.entropy_base)
    per_node = _entropy(trace.node_choices, config.entropy_base).mean(axis=1)
    return EntropySnapshot(per_node, float(per_node.mean()), epoch, config.entropy_base)


def is_hardened(snapshot: EntropySnapshot, threshold: float = 0.10) -> np.ndarray:
    """Per-node flag: mean entropy strictly below `threshold`.

    A node sitting exactly at the threshold counts as not hardened. The
    default 0.10 is calibrated for entropies in bits.
    """
    return snapshot.per_node_mean_entropy < threshold


def scale_node_heads(params: FffParams, scale: float) -> FffParams:
    """Copy of `params` with every node head (weights and bias) scaled.

    Uniformly rescaling a node's head parameters multiplies its logit by
    the same factor, squashing the sigmoid toward a step function without
    moving the decision boundary; scales > 1 therefore never increase any
    choice entropy.
    """
    out = params.copy()
    out.node_head_w *= scale
    out.node_head_b *= scale
    return out


def fff_sizes(config: FffConfig) -> dict[str, int]:
    """Neuron-count bookkeeping for one layer.

    Size counts every neuron engaged (nodes + leaves), width only the
    output-producing leaf neurons; overhead is their difference. Training
    engages the whole tree, inference a single root-to-leaf path.
    """
    d, n, ell = config.depth, config.node_size, config.leaf_size
    training_size = (2**d - 1) * n + 2**d * ell
    inference_size = d * n + ell
    training_width = 2**d * ell
    inference_width = ell
    return {
        "training_size": training_size,
        "inference_size": inference_size,
        "training_width": training_width,
        "inference_width": inference_width,
        "overhead_train": training_size - training_width,
        "overhead_infer": inference_size - inference_width,
    }


def flop_count_infer(config: FffConfig, batch_size: int = 1) -> int:
    """Exact multiply-accumulate count of `forward_infer` per this schedule.

    Per sample: d node evaluations at n*(dim_in + 1) MACs each (hidden
    layer plus head dot product; bias adds are not MACs), then one leaf at
    leaf_size*(dim_in + dim_out).
    """
    d, n, ell = config.depth, config.node_size, config.leaf_size
    per_sample = d * n * (config.dim_in + 1) + ell * (config.dim_in + config.dim_out)
    return batch_size * per_sample


def flop_count_train(config: FffConfig, batch_size: int = 1) -> int:
    """Exact MAC count of `forward_train` per this schedule.

    Per sample: all 2^d - 1 node evaluations, all 2^d leaf evaluations,
    plus (for depth > 0) the mixture accumulation (2^d * dim_out) and the
    two path-probability products each node contributes. Depth 0 skips
    the mixture entirely and matches the inference count.
    """
    d, n, ell = config.depth, config.node_size, config.leaf_size
    num_nodes, num_leaves = 2**d - 1, 2**d
    per_sample = num_nodes * n * (config.dim_in + 1) + num_leaves * ell * (
        config.dim_in + config.dim_out
    )
    if d > 0:
        per_sample += num_leaves * config.dim_out + 2 * num_nodes
    return batch_size * per_sample
