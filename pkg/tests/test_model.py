import math

import numpy as np
import pytest

from rgnn.gso import Gso
from rgnn.model import (
    GnnParams,
    LabeledTargets,
    apply_filter,
    forward,
    init_params,
    load_params,
    masked_cross_entropy,
    save_params,
)

from conftest import path_gso, random_gso


def make_targets(labels, num_classes, train=None):
    labels = np.asarray(labels)
    n = labels.shape[0]
    train = np.ones(n, dtype=bool) if train is None else np.asarray(train, bool)
    empty = np.zeros(n, dtype=bool)
    return LabeledTargets(labels=labels, train_mask=train, val_mask=empty,
                          test_mask=empty, num_classes=num_classes)


class TestApplyFilter:
    def test_identity_filter(self, rng):
        g = random_gso(rng, 6)
        x = rng.normal(size=6)
        assert np.array_equal(apply_filter([1.0, 0.0, 0.0], g, x), x)

    def test_zero_operator_keeps_only_constant_term(self, rng):
        x = rng.normal(size=5)
        out = apply_filter([2.0, 3.0, 4.0], Gso(np.zeros((5, 5))), x)
        assert np.allclose(out, 2.0 * x)

    def test_single_shift_on_path_is_neighbor_indicator(self):
        # hand oracle: S e_1 on a 3-node path marks the neighbors of node 1
        g = path_gso(3)
        x = np.array([0.0, 1.0, 0.0])
        expected = g.entries @ x
        assert np.array_equal(apply_filter([0.0, 1.0], g, x), expected)
        assert np.array_equal(expected, np.array([1.0, 0.0, 1.0]))

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError, match="mismatch"):
            apply_filter([1.0], random_gso(rng, 4), np.zeros(5))

    def test_matches_materialized_polynomial(self, rng):
        g = random_gso(rng, 8)
        h = rng.normal(size=4)
        x = rng.normal(size=8)
        s = g.entries
        expected = h[0] * x + h[1] * s @ x + h[2] * s @ s @ x + h[3] * s @ s @ s @ x
        assert np.allclose(apply_filter(h, g, x), expected, atol=1e-12)


class TestForward:
    def test_single_tap_is_plain_linear_map(self, rng):
        x = rng.normal(size=(6, 4))
        g = random_gso(rng, 6)
        w = rng.normal(size=(4, 3))
        logits, _ = forward(x, g, GnnParams([[w]]))
        assert np.allclose(logits, x @ w, atol=1e-14)

    def test_zero_params_zero_logits(self, rng):
        x = rng.normal(size=(5, 3))
        g = random_gso(rng, 5)
        params = GnnParams([[np.zeros((3, 2)), np.zeros((3, 2))]])
        logits, _ = forward(x, g, params)
        assert np.array_equal(logits, np.zeros((5, 2)))

    def test_two_node_hand_computation(self):
        # pencil-and-paper: S = [[0,1],[1,0]], x = (1, 2), taps 2 and 3:
        # z = 2*x + 3*Sx = (2, 4) + (6, 3) = (8, 7)
        g = Gso(np.array([[0.0, 1.0], [1.0, 0.0]]))
        x = np.array([[1.0], [2.0]])
        params = GnnParams([[np.array([[2.0]]), np.array([[3.0]])]])
        logits, _ = forward(x, g, params)
        assert np.array_equal(logits, np.array([[8.0], [7.0]]))

    def test_hidden_layer_relu(self, rng):
        x = np.array([[1.0], [-1.0]])
        g = Gso(np.zeros((2, 2)))
        params = GnnParams([
            [np.array([[1.0]])],  # hidden: relu(x)
            [np.array([[1.0]])],  # output: identity
        ])
        logits, cache = forward(x, g, params)
        assert np.array_equal(logits, np.array([[1.0], [0.0]]))
        assert np.array_equal(cache.activations[0], np.array([[1.0], [0.0]]))

    def test_cache_shapes(self, rng):
        x = rng.normal(size=(7, 4))
        g = random_gso(rng, 7)
        params = init_params((4, 3, 2), order=3, seed=0)
        logits, cache = forward(x, g, params)
        assert logits.shape == (7, 2)
        assert [len(l) for l in cache.shifted_inputs] == [3, 3]
        assert cache.shifted_inputs[0][2].shape == (7, 4)
        assert cache.preactivations[1].shape == (7, 2)
        assert np.array_equal(cache.layer_inputs[1], cache.activations[0])

    def test_shifted_first_reuse_gives_identical_output(self, rng):
        x = rng.normal(size=(6, 3))
        g = random_gso(rng, 6)
        params = init_params((3, 4, 2), order=3, seed=5)
        plain, _ = forward(x, g, params)
        ladder = [x, g.entries @ x, g.entries @ (g.entries @ x)]
        reused, _ = forward(x, g, params, shifted_first=ladder)
        assert np.array_equal(plain, reused)

    def test_non_finite_names_layer(self, rng):
        x = np.full((3, 2), 1e308)
        g = random_gso(rng, 3)
        params = GnnParams([[np.full((2, 2), 1e308)]], validate=False)
        with np.errstate(over="ignore"), pytest.raises(FloatingPointError, match="layer 1"):
            forward(x, g, params)

    def test_permutation_equivariance(self, rng):
        x = rng.normal(size=(9, 4))
        g = random_gso(rng, 9)
        params = init_params((4, 5, 3), order=3, seed=2)
        base, _ = forward(x, g, params)
        for _ in range(5):
            perm = rng.permutation(9)
            p = np.eye(9)[perm]
            permuted, _ = forward(p @ x, p @ g.entries @ p.T, params)
            assert np.allclose(permuted, p @ base, atol=1e-12)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError, match="mismatch"):
            forward(np.zeros((4, 2)), random_gso(rng, 5), GnnParams([[np.zeros((2, 2))]]))


class TestGnnParams:
    def test_shape_chain_validated(self):
        with pytest.raises(ValueError, match="input dim"):
            GnnParams([[np.zeros((3, 4))], [np.zeros((5, 2))]])

    def test_tap_count_consistent(self):
        with pytest.raises(ValueError, match="taps"):
            GnnParams([[np.zeros((3, 4))], [np.zeros((4, 2)), np.zeros((4, 2))]])

    def test_dims_and_order(self):
        params = init_params((4, 3, 2), order=2, seed=0)
        assert params.dims == (4, 3, 2)
        assert params.order == 2
        assert params.depth == 2

    def test_checkpoint_round_trip(self, tmp_path):
        params = init_params((5, 4, 3), order=3, seed=42)
        path = tmp_path / "theta.txt"
        save_params(params, path)
        assert load_params(path) == params


class TestInitParams:
    def test_deterministic(self):
        assert init_params((6, 3), 2, seed=9) == init_params((6, 3), 2, seed=9)
        assert init_params((6, 3), 2, seed=9) != init_params((6, 3), 2, seed=10)

    def test_bounds_respected(self):
        params = init_params((40, 30), order=3, seed=1)
        bound = math.sqrt(6.0 / 70.0) / 3
        for mat in params.layers[0]:
            assert np.abs(mat).max() <= bound

    def test_empirical_variance(self):
        # 10^4 draws per tap; uniform on [-b, b] has variance b^2 / 3
        params = init_params((100, 100), order=1, seed=3)
        bound = math.sqrt(6.0 / 200.0)
        var = params.layers[0][0].var()
        assert abs(var - bound**2 / 3) < 0.1 * bound**2 / 3

    def test_rejects_bad_dims(self):
        with pytest.raises(ValueError):
            init_params((4,), order=1, seed=0)


class TestMaskedCrossEntropy:
    def test_uniform_logits_log_c(self):
        targets = make_targets([0, 1, 0], num_classes=2)
        logits = np.zeros((3, 2))
        assert masked_cross_entropy(logits, targets, targets.train_mask) == pytest.approx(
            math.log(2.0))

    def test_saturated_correct_logits_near_zero(self):
        targets = make_targets([0, 1], num_classes=2)
        logits = np.array([[50.0, 0.0], [0.0, 50.0]])
        assert masked_cross_entropy(logits, targets, targets.train_mask) < 1e-20

    def test_matches_per_node_loop(self, rng):
        logits = rng.normal(size=(5, 3))
        labels = rng.integers(0, 3, size=5)
        targets = make_targets(labels, num_classes=3)
        expected = 0.0
        for i in range(5):
            e = np.exp(logits[i])
            expected += -math.log(e[labels[i]] / e.sum())
        expected /= 5
        assert masked_cross_entropy(logits, targets, targets.train_mask) == pytest.approx(
            expected, rel=1e-12)

    def test_empty_mask_errors(self):
        targets = make_targets([0, 1], num_classes=2)
        with pytest.raises(ValueError, match="empty mask"):
            masked_cross_entropy(np.zeros((2, 2)), targets, np.zeros(2, dtype=bool))

    def test_loss_nonnegative(self, rng):
        logits = rng.normal(size=(30, 4), scale=5.0)
        labels = rng.integers(0, 4, size=30)
        targets = make_targets(labels, num_classes=4)
        assert masked_cross_entropy(logits, targets, targets.train_mask) >= 0.0

    def test_stable_under_huge_logit_shift(self):
        targets = make_targets([0], num_classes=2)
        logits = np.array([[1000.0, 999.0]])
        loss = masked_cross_entropy(logits, targets, targets.train_mask)
        assert math.isfinite(loss)
        assert loss == pytest.approx(math.log(1 + math.exp(-1)), rel=1e-9)


class TestLabeledTargets:
    def test_masks_must_be_disjoint(self):
        with pytest.raises(ValueError, match="disjoint"):
            LabeledTargets(labels=np.array([0, 1]),
                           train_mask=np.array([True, False]),
                           val_mask=np.array([True, False]),
                           test_mask=np.array([False, False]), num_classes=2)

    def test_masked_labels_in_range(self):
        with pytest.raises(ValueError, match="labels"):
            LabeledTargets(labels=np.array([0, 5]),
                           train_mask=np.array([True, True]),
                           val_mask=np.zeros(2, bool),
                           test_mask=np.zeros(2, bool), num_classes=2)
