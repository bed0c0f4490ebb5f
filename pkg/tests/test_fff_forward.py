from __future__ import annotations

import numpy as np
import pytest

from helpers import spread_node_logits

from fffkit.fff import (
    FffConfig,
    fff_init,
    forward_infer,
    forward_train,
    forward_train_reference,
    scale_node_heads,
)
from fffkit.tensor import DimensionError, Rng


def make_config(**kwargs) -> FffConfig:
    base = dict(dim_in=5, dim_out=4, depth=2, leaf_size=3, transpose_prob=0.0)
    base.update(kwargs)
    return FffConfig(**base)


def zero_node_params(params):
    params.node_hidden_w[:] = 0.0
    params.node_hidden_b[:] = 0.0
    params.node_head_w[:] = 0.0
    params.node_head_b[:] = 0.0
    return params


class TestInit:
    def test_depth_zero_is_a_single_leaf(self):
        params = fff_init(make_config(depth=0), Rng(0))
        assert params.node_hidden_w.shape[0] == 0
        assert params.leaf_w1.shape[0] == 1

    def test_tree_counts(self):
        params = fff_init(make_config(depth=3, node_size=1), Rng(0))
        assert params.node_hidden_w.shape[0] == 7
        assert params.leaf_w1.shape[0] == 8

    def test_same_seed_bit_identical(self):
        cfg = make_config(depth=2, node_size=2)
        a = fff_init(cfg, Rng(42))
        b = fff_init(cfg, Rng(42))
        for x, y in zip(a.arrays(), b.arrays()):
            assert np.array_equal(x, y)

    def test_biases_start_at_zero(self):
        params = fff_init(make_config(depth=2), Rng(1))
        assert not params.node_hidden_b.any()
        assert not params.leaf_b1.any()
        assert not params.leaf_b2.any()


class TestConfigValidation:
    def test_negative_depth_rejected(self):
        with pytest.raises(ValueError):
            make_config(depth=-1)

    def test_coin_flip_transposition_rejected(self):
        with pytest.raises(ValueError, match="coin flip"):
            make_config(transpose_prob=0.5)

    def test_bad_entropy_base_rejected(self):
        with pytest.raises(ValueError):
            make_config(entropy_base="dits")


class TestForwardTrain:
    def test_depth_zero_equals_plain_leaf(self):
        cfg = make_config(depth=0)
        params = fff_init(cfg, Rng(3))
        x = Rng(4).normal((7, cfg.dim_in))
        out, _ = forward_train(params, cfg, x)
        hidden = np.maximum(x @ params.leaf_w1[0] + params.leaf_b1[0], 0.0)
        expected = hidden @ params.leaf_w2[0] + params.leaf_b2[0]
        assert np.array_equal(out, expected)

    @pytest.mark.parametrize("depth", [1, 2, 3, 4, 5])
    def test_zero_nodes_give_uniform_leaf_average(self, depth):
        # With every node parameter zero each choice is exactly 0.5, so the
        # layer collapses to a uniformly rescaled sum of all leaves.
        cfg = make_config(depth=depth)
        params = zero_node_params(fff_init(cfg, Rng(5)))
        x = Rng(6).normal((9, cfg.dim_in))
        out, trace = forward_train(params, cfg, x)
        expected = 2.0**-depth * trace.leaf_outputs.sum(axis=0)
        assert np.abs(out - expected).max() <= 1e-12

    def test_matches_recursive_reference(self):
        # 50 random instances against the independently written recursive
        # descent, depths up to 4.
        rng = np.random.default_rng(2024)
        for case in range(50):
            depth = int(rng.integers(0, 5))
            cfg = FffConfig(
                dim_in=int(rng.integers(2, 7)),
                dim_out=int(rng.integers(1, 5)),
                depth=depth,
                leaf_size=int(rng.integers(1, 5)),
                node_size=int(rng.integers(1, 3)),
                transpose_prob=0.0,
            )
            params = fff_init(cfg, Rng(case))
            for arr in params.arrays():  # nonzero biases to exercise every term
                arr += 0.1 * rng.standard_normal(arr.shape)
            x = rng.standard_normal((6, cfg.dim_in))
            out, _ = forward_train(params, cfg, x)
            want = np.stack([forward_train_reference(params, cfg, row) for row in x])
            assert np.abs(out - want).max() <= 1e-10

    def test_mixture_rows_are_stochastic_vectors(self):
        cfg = make_config(depth=4)
        params = fff_init(cfg, Rng(8))
        x = Rng(9).normal((32, cfg.dim_in))
        _, trace = forward_train(params, cfg, x)
        mixture = trace.leaf_mixture
        assert mixture.min() >= 0.0
        assert np.abs(mixture.sum(axis=1) - 1.0).max() <= 1e-9

    def test_mixture_normalized_even_when_saturated(self):
        cfg = make_config(depth=3)
        params = scale_node_heads(fff_init(cfg, Rng(10)), 1e6)
        x = Rng(11).normal((64, cfg.dim_in))
        _, trace = forward_train(params, cfg, x)
        assert np.abs(trace.leaf_mixture.sum(axis=1) - 1.0).max() <= 1e-9

    def test_mixture_is_path_product_of_choices(self):
        cfg = make_config(depth=3)
        params = fff_init(cfg, Rng(12))
        x = Rng(13).normal((5, cfg.dim_in))
        _, trace = forward_train(params, cfg, x)
        mixture = trace.leaf_mixture
        for b in range(x.shape[0]):
            for leaf in range(cfg.num_leaves):
                prob = 1.0
                pos = cfg.num_nodes + leaf
                while pos > 0:
                    parent = (pos - 1) // 2
                    c = trace.node_choices[parent, b]
                    prob *= c if pos == 2 * parent + 2 else 1.0 - c
                    pos = parent
                assert abs(mixture[b, leaf] - prob) <= 1e-12

    def test_shape_mismatch_raises(self):
        cfg = make_config()
        params = fff_init(cfg, Rng(1))
        with pytest.raises(DimensionError):
            forward_train(params, cfg, np.zeros((4, cfg.dim_in + 1)))


class TestTranspositions:
    def test_forced_mask_swaps_the_mixture(self):
        cfg = make_config(depth=1)
        params = fff_init(cfg, Rng(20))
        x = Rng(21).normal((6, cfg.dim_in))
        _, plain = forward_train(params, cfg, x, transpose_mask=np.array([False]))
        _, flipped = forward_train(params, cfg, x, transpose_mask=np.array([True]))
        assert np.allclose(plain.leaf_mixture[:, 0], flipped.leaf_mixture[:, 1])
        assert np.allclose(plain.leaf_mixture[:, 1], flipped.leaf_mixture[:, 0])
        assert flipped.transposed_mask.all()

    def test_random_masks_are_seed_deterministic(self):
        cfg = make_config(depth=4, transpose_prob=0.4)
        params = fff_init(cfg, Rng(22))
        x = Rng(23).normal((3, cfg.dim_in))
        _, t1 = forward_train(params, cfg, x, rng=Rng(77))
        _, t2 = forward_train(params, cfg, x, rng=Rng(77))
        assert np.array_equal(t1.transposed_mask, t2.transposed_mask)
        assert t1.transposed_mask.any()  # prob 0.4 over 15 nodes

    def test_no_rng_means_no_transpositions(self):
        cfg = make_config(depth=3, transpose_prob=0.4)
        params = fff_init(cfg, Rng(24))
        x = Rng(25).normal((3, cfg.dim_in))
        _, trace = forward_train(params, cfg, x)
        assert not trace.transposed_mask.any()


class TestForwardInfer:
    def test_depth_zero_routes_to_leaf_zero(self):
        cfg = make_config(depth=0)
        params = fff_init(cfg, Rng(30))
        x = Rng(31).normal((5, cfg.dim_in))
        out, leaf_index = forward_infer(params, cfg, x)
        train_out, _ = forward_train(params, cfg, x)
        assert np.array_equal(leaf_index, np.zeros(5, dtype=np.intp))
        assert np.allclose(out, train_out, atol=0)

    @pytest.mark.parametrize("depth", [1, 2, 4])
    def test_tie_goes_right(self, depth):
        # Zero node parameters put every choice exactly at 1/2; "greater or
        # equal" branches right at every level, landing on the last leaf.
        cfg = make_config(depth=depth)
        params = zero_node_params(fff_init(cfg, Rng(32)))
        _, leaf_index = forward_infer(params, cfg, Rng(33).normal((8, cfg.dim_in)))
        assert (leaf_index == 2**depth - 1).all()

    def test_routing_agrees_with_mixture_argmax_once_decisive(self):
        # Greedy descent equals the mixture argmax only once every choice is
        # decisive: with a margin of 0.3 the greedy path product is at least
        # 0.8^3 = 0.512 while any deviating path carries a factor <= 0.2.
        # (For near-uniform choices a non-greedy path product can win, so
        # the unconditional form of this property does not hold.)
        cfg = make_config(depth=3)
        pool = Rng(35).normal((4000, cfg.dim_in))
        params = spread_node_logits(fff_init(cfg, Rng(34)), cfg, pool, target_std=3.0)
        _, trace = forward_train(params, cfg, pool)
        _, leaf_index = forward_infer(params, cfg, pool)
        decisive = (np.abs(trace.node_choices - 0.5) >= 0.30).all(axis=0)
        assert decisive.sum() >= 32
        assert np.array_equal(
            leaf_index[decisive], trace.leaf_mixture[decisive].argmax(axis=1)
        )

    def test_saturated_model_matches_soft_forward(self):
        # Boundary-margin construction: equalize per-node logit spread, keep
        # probe samples whose node logits all clear a margin of 0.25, then
        # squash the sigmoids 100x toward steps (margin becomes 25).
        cfg = make_config(depth=3, dim_in=6)
        pool = Rng(37).normal((4000, cfg.dim_in))
        params = spread_node_logits(fff_init(cfg, Rng(36)), cfg, pool, target_std=2.0)
        _, trace = forward_train(params, cfg, pool)
        margin_ok = (np.abs(trace.node_choices - 0.5) >= 0.062).all(axis=0)
        probe = pool[margin_ok][:256]
        assert probe.shape[0] >= 64
        hard_params = scale_node_heads(params, 100.0)
        soft_out, _ = forward_train(hard_params, cfg, probe)
        hard_out, _ = forward_infer(hard_params, cfg, probe)
        assert np.abs(soft_out - hard_out).max() <= 1e-6
