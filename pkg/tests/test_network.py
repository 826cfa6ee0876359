import numpy as np
import pytest

from causenet.data import Dataset, standardize
from causenet.errors import ConfigError, ShapeError
from causenet.graphs import CausalGraph, mask_from_full
from causenet.network import (
    apply_mask,
    checkpoint_bytes,
    compute_adjacency,
    default_hidden_sizes,
    forward,
    init_network,
    load_checkpoint,
    network_from_checkpoint,
    checkpoint_dict,
    save_checkpoint,
)
from causenet.numerics import rng
from causenet.training import TrainConfig, inject_graph


def relu(x):
    return np.maximum(x, 0.0)


def straight_line_forward(net, row):
    """Independent per-sub-network recomputation of a single row."""
    outs = np.zeros(net.d + 1)
    for k in range(net.d + 1):
        h = relu(row @ net.theta1[:, :, k] + net.hidden_biases[0])
        for w, b in zip(net.hidden_weights, net.hidden_biases[1:]):
            h = relu(h @ w + b)
        outs[k] = h @ net.out_weights[:, k] + net.out_biases[k]
    return outs


class TestInit:
    def test_same_seed_bitwise_identical(self):
        a = init_network(4, seed=9)
        b = init_network(4, seed=9)
        assert np.array_equal(a.theta1, b.theta1)
        for wa, wb in zip(a.hidden_weights, b.hidden_weights):
            assert np.array_equal(wa, wb)
        assert np.array_equal(a.out_weights, b.out_weights)

    def test_default_first_hidden_width_follows_node_count(self):
        net = init_network(9, seed=0)
        assert net.width == 20  # 2 * (d+1) with d=9
        assert default_hidden_sizes(9) == (20, 7, 20)

    def test_self_mask_holds(self):
        net = init_network(5, seed=3)
        for k in range(6):
            assert np.array_equal(net.theta1[k, :, k], np.zeros(net.width))

    def test_rejects_zero_features(self):
        with pytest.raises(ConfigError):
            init_network(0)

    def test_rejects_empty_hidden(self):
        with pytest.raises(ConfigError):
            init_network(3, hidden_sizes=())


class TestForward:
    def test_zero_weights_give_biases(self):
        net = init_network(3, seed=0)
        net.theta1[:] = 0.0
        for w in net.hidden_weights:
            w[:] = 0.0
        net.out_weights[:] = 0.0
        net.out_biases[:] = np.arange(4.0)
        _, recon = forward(net, np.zeros((5, 4)))
        assert np.array_equal(recon, np.tile(np.arange(4.0), (5, 1)))

    def test_masked_input_cannot_influence_output(self):
        net = init_network(4, seed=1)
        mask = net.mask.copy()
        mask[2, 0] = False
        net = apply_mask(net, mask)
        g = rng(2)
        batch = g.normal(size=(6, 5))
        _, base = forward(net, batch)
        poked = batch.copy()
        poked[:, 2] += 10.0
        _, out = forward(net, poked)
        # Sub-network 0 never reads feature 2; other heads do change.
        assert np.array_equal(base[:, 0], out[:, 0])
        assert not np.array_equal(base[:, 1], out[:, 1])

    def test_matches_straight_line_oracle(self):
        net = init_network(4, seed=5)
        row = rng(6).normal(size=(1, 5))
        _, recon = forward(net, row)
        assert np.allclose(recon[0], straight_line_forward(net, row[0]), atol=1e-12)

    def test_column_mismatch(self):
        net = init_network(3, seed=0)
        with pytest.raises(ShapeError):
            forward(net, np.zeros((2, 7)))

    def test_classification_prediction_is_sigmoid(self):
        net = init_network(3, task="classification", seed=0)
        batch = rng(1).normal(size=(4, 4))
        pred, recon = forward(net, batch)
        assert np.all((pred > 0) & (pred < 1))
        assert np.allclose(pred, 1 / (1 + np.exp(-recon[:, 0])))

    def test_permutation_consistency(self):
        # Permuting non-target columns together with network indices leaves
        # outputs identical up to the same permutation.
        net = init_network(4, seed=8)
        perm = np.array([0, 3, 1, 4, 2])  # target fixed
        permuted = net.copy()
        permuted.theta1 = net.theta1[np.ix_(perm, range(net.width), perm)]
        permuted.out_weights = net.out_weights[:, perm]
        permuted.out_biases = net.out_biases[perm]
        permuted.mask = net.mask[np.ix_(perm, perm)]
        batch = rng(3).normal(size=(7, 5))
        _, base = forward(net, batch)
        _, swapped = forward(permuted, batch[:, perm])
        assert np.allclose(swapped, base[:, perm], atol=1e-12)


class TestAdjacency:
    def test_zero_input_layer(self):
        net = init_network(3, seed=0)
        net.theta1[:] = 0.0
        assert np.array_equal(compute_adjacency(net), np.zeros((4, 4)))

    def test_three_four_five(self):
        net = init_network(2, hidden_sizes=(2,), seed=0)
        net.theta1[:] = 0.0
        net.theta1[1, :, 0] = (3.0, 4.0)
        w = compute_adjacency(net)
        assert w[1, 0] == 5.0

    def test_matches_elementwise_oracle(self):
        net = init_network(5, seed=4)
        w = compute_adjacency(net)
        n = net.d + 1
        for i in range(n):
            for k in range(n):
                expected = np.sqrt(sum(net.theta1[i, j, k] ** 2 for j in range(net.width)))
                assert abs(w[i, k] - expected) <= 1e-12

    def test_hollow(self):
        net = init_network(6, seed=2)
        assert np.array_equal(np.diagonal(compute_adjacency(net)), np.zeros(7))

    def test_sign_flip_invariance(self):
        net = init_network(3, seed=9)
        w = compute_adjacency(net)
        flipped = net.copy()
        flipped.theta1 = -flipped.theta1
        assert np.allclose(compute_adjacency(flipped), w, atol=0)


def small_standardized_dataset(d, n, seed):
    values = rng(seed).normal(size=(n, d + 1))
    return standardize(Dataset(values=values, column_names=tuple(f"c{i}" for i in range(d + 1)), task="regression"))


class TestApplyMask:
    def test_all_allowed_only_zeroes_diagonal(self):
        net = init_network(4, seed=1)
        before = net.theta1.copy()
        masked = apply_mask(net, np.ones((5, 5), dtype=bool))
        assert np.array_equal(masked.theta1, before)  # diagonal already zero

    def test_masked_entry_zeroes_adjacency(self):
        net = init_network(4, seed=1)
        mask = net.mask.copy()
        mask[1, 0] = False
        masked = apply_mask(net, mask)
        assert compute_adjacency(masked)[1, 0] == 0.0

    def test_masked_pairs_stay_zero_through_training(self):
        data = small_standardized_dataset(4, 120, seed=3)
        net = init_network(4, seed=1)
        graph = CausalGraph(5, frozenset({(1, 0), (2, 0), (3, 4)}))
        config = TrainConfig(max_steps=100, patience=50, seed=2)
        result = inject_graph(data, net, config, graph)
        w = compute_adjacency(result.final_network)
        allowed = mask_from_full(graph)
        assert np.array_equal(w[~allowed], np.zeros((~allowed).sum()))
        # The network did train: some allowed entry moved.
        assert w[allowed].max() > 0


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        net = init_network(5, hidden_sizes=(8, 3), task="classification", seed=77)
        net.theta1 += 1e-17  # exercise full float precision
        path = tmp_path / "net.json"
        save_checkpoint(net, path)
        back = load_checkpoint(path)
        assert back.task == net.task
        assert back.hidden_sizes == net.hidden_sizes
        assert back.seed == net.seed
        assert np.array_equal(back.theta1, net.theta1)
        assert np.array_equal(back.mask, net.mask)
        for a, b in zip(back.hidden_weights, net.hidden_weights):
            assert np.array_equal(a, b)
        assert np.array_equal(back.out_weights, net.out_weights)
        assert checkpoint_bytes(back) == checkpoint_bytes(net)

    def test_rejects_foreign_payload(self):
        with pytest.raises(ConfigError):
            network_from_checkpoint({"format": "something-else"})

    def test_dict_contains_shapes_and_seed(self):
        net = init_network(3, seed=5)
        payload = checkpoint_dict(net)
        assert payload["seed"] == 5
        assert payload["hidden_sizes"] == list(net.hidden_sizes)
        assert payload["arrays"]["theta1"]["shape"] == [4, net.width, 4]
