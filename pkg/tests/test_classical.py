import numpy as np
import pytest

from qnngeom.classical import (
    ACTIVATIONS,
    MlpClassifier,
    MlpTopology,
    enumerate_topologies,
    parse_topology,
    softmax,
)
from qnngeom.errors import ValidationError


def finite_diff_log_prob(model, x, y, theta, step=1e-5):
    grad = np.zeros_like(theta)
    X = x.reshape(1, -1)
    for j in range(theta.size):
        plus = theta.copy()
        plus[j] += step
        minus = theta.copy()
        minus[j] -= step
        lp = np.log(model.probs_at(X, plus)[0, y])
        lm = np.log(model.probs_at(X, minus)[0, y])
        grad[j] = (lp - lm) / (2 * step)
    return grad


class TestForward:
    def test_zero_weights_give_uniform_output(self):
        model = MlpClassifier(layer_sizes=(4, 3, 2), use_bias=True)
        probs = model.probs_at(np.random.default_rng(0).normal(size=(5, 4)),
                               np.zeros(model.n_params))
        np.testing.assert_allclose(probs, 0.5, atol=1e-15)

    def test_softmax_of_zero_logits(self):
        np.testing.assert_allclose(softmax(np.zeros((1, 2))), [[0.5, 0.5]])

    def test_softmax_normalization_every_call(self):
        gen = np.random.default_rng(1)
        model = MlpClassifier(layer_sizes=(3, 7, 4), use_bias=True, activation="relu")
        for _ in range(10):
            theta = gen.uniform(-1, 1, model.n_params)
            probs = model.probs_at(gen.normal(size=(6, 3)), theta)
            np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
            assert np.all(probs > 0)

    def test_matches_straight_line_recomputation(self):
        gen = np.random.default_rng(2)
        model = MlpClassifier(layer_sizes=(3, 5, 2), use_bias=True, activation="tanh")
        theta = gen.uniform(-1, 1, model.n_params)
        X = gen.normal(size=(4, 3))

        w1 = theta[:15].reshape(3, 5)
        b1 = theta[15:20]
        w2 = theta[20:30].reshape(5, 2)
        b2 = theta[30:32]
        logits = np.tanh(X @ w1 + b1) @ w2 + b2
        expected = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
        np.testing.assert_allclose(model.probs_at(X, theta), expected, atol=1e-12)


class TestBackprop:
    @pytest.mark.parametrize("activation", sorted(ACTIVATIONS))
    def test_matches_finite_differences(self, activation):
        gen = np.random.default_rng(hash(activation) % 2**32)
        model = MlpClassifier(
            layer_sizes=(4, 6, 3, 2), use_bias=True, activation=activation
        )
        assert model.n_params <= 100
        for _ in range(3):
            theta = gen.uniform(-1, 1, model.n_params)
            x = gen.normal(size=4)
            y = int(gen.integers(0, 2))
            grad = model.grad_log_prob(x, y, theta)
            fd = finite_diff_log_prob(model, x, y, theta)
            assert np.abs(grad - fd).max() <= 1e-6

    def test_zero_weight_output_layer_gradient_pattern(self):
        # with all-zero weights p = 1/2, so d log p_y / d W_last is the
        # last hidden activations scaled by (1{y=c} - 1/2); hidden
        # activations are act(0)
        model = MlpClassifier(layer_sizes=(2, 3, 2), use_bias=True,
                              activation="sigmoid")
        x = np.array([0.3, -0.7])
        grad = model.grad_log_prob(x, 0, np.zeros(model.n_params))
        hidden = np.full(3, 0.5)  # sigmoid(0)
        expected_w2 = hidden[:, None] * np.array([0.5, -0.5])
        np.testing.assert_allclose(grad[9:15], expected_w2.reshape(-1), atol=1e-12)
        np.testing.assert_allclose(grad[15:17], [0.5, -0.5], atol=1e-12)

    def test_duplicated_inputs_give_symmetric_gradients(self):
        model = MlpClassifier(layer_sizes=(2, 2, 2), activation="tanh")
        theta = np.zeros(model.n_params)
        x = np.array([0.5, 0.5])  # symmetric input, symmetric weights
        grad_w1 = model.grad_log_prob(x, 1, theta)[:4].reshape(2, 2)
        np.testing.assert_allclose(grad_w1[0], grad_w1[1], atol=1e-12)

    def test_batched_equals_per_sample(self):
        gen = np.random.default_rng(5)
        model = MlpClassifier(layer_sizes=(3, 4, 2), use_bias=True, activation="relu")
        theta = gen.uniform(-1, 1, model.n_params)
        X = gen.normal(size=(6, 3))
        y = gen.integers(0, 2, 6)
        logp, grads, _ = model.log_prob_and_grad(X, y, theta)
        for i in range(6):
            single = model.grad_log_prob(X[i], int(y[i]), theta)
            np.testing.assert_allclose(grads[i], single, atol=1e-14)

    def test_loss_grad_fn_equals_mean_gradient(self):
        gen = np.random.default_rng(6)
        model = MlpClassifier(layer_sizes=(3, 5, 2), use_bias=True, activation="tanh")
        theta = gen.uniform(-1, 1, model.n_params)
        X = gen.normal(size=(10, 3))
        y = gen.integers(0, 2, 10)
        loss, grad = model.make_loss_grad_fn(X, y)(theta)
        logp, per_sample, _ = model.log_prob_and_grad(X, y, theta)
        assert loss == pytest.approx(-logp.mean())
        np.testing.assert_allclose(grad, -per_sample.mean(axis=0), atol=1e-12)


class TestTopologies:
    def test_param_count_with_and_without_bias(self):
        assert MlpTopology((4, 2)).param_count == 8
        assert MlpTopology((4, 2), use_bias=True).param_count == 10
        assert MlpTopology((6, 110, 2)).param_count == 880
        assert MlpTopology((4, 1, 1, 1, 2)).param_count == 8

    def test_one_hidden_layer_budget_without_solution(self):
        # 4h + 2h = 8 has no integer h
        found = enumerate_topologies(8, 4, 2, max_layers=1)
        assert all(len(t.layer_sizes) != 3 or t.use_bias for t in found)

    def test_appendix_net_is_recovered(self):
        found = enumerate_topologies(880, 6, 2, max_layers=1)
        specs = {(t.layer_sizes, t.use_bias) for t in found}
        assert ((6, 110, 2), False) in specs

    def test_zero_budget_gives_nothing(self):
        assert enumerate_topologies(0, 4, 2) == []

    def test_every_enumerated_topology_hits_budget_exactly(self):
        for d in (8, 40):
            for topology in enumerate_topologies(d, 4, 2):
                assert topology.param_count == d

    def test_enumeration_is_deterministic_and_sorted(self):
        first = enumerate_topologies(40, 4, 2)
        second = enumerate_topologies(40, 4, 2)
        assert first == second
        keys = [(len(t.layer_sizes), t.layer_sizes, t.use_bias) for t in first]
        assert keys == sorted(keys)

    def test_direct_map_included_when_it_fits(self):
        found = enumerate_topologies(8, 4, 2, max_layers=2)
        assert any(t.layer_sizes == (4, 2) and not t.use_bias for t in found)


class TestTopologyStrings:
    def test_parse_round_trip(self):
        topology = parse_topology("4-2-8-2:bias:tanh")
        assert topology == MlpTopology((4, 2, 8, 2), True, "tanh")
        assert parse_topology(topology.spec_string()) == topology

    def test_parse_defaults(self):
        topology = parse_topology("6-110-2")
        assert topology.layer_sizes == (6, 110, 2)
        assert not topology.use_bias

    def test_parse_rejects_junk(self):
        with pytest.raises(ValidationError):
            parse_topology("4-x-2")
        with pytest.raises(ValidationError):
            parse_topology("4-2:swish")

    def test_topology_validation(self):
        with pytest.raises(ValidationError):
            MlpTopology((4,))
        with pytest.raises(ValidationError):
            MlpTopology((4, 0, 2))


class TestEstimatorSurface:
    def test_fit_separable_data(self):
        gen = np.random.default_rng(0)
        X = np.concatenate([
            gen.normal(-2, 0.3, (25, 2)),
            gen.normal(2, 0.3, (25, 2)),
        ])
        y = np.array([0] * 25 + [1] * 25)
        model = MlpClassifier(layer_sizes=(2, 4, 2), use_bias=True,
                              activation="tanh", n_iter=80, random_state=3)
        model.fit(X, y)
        assert model.score(X, y) == 1.0
        assert len(model.loss_curve_) == 81

    def test_get_params_round_trip(self):
        model = MlpClassifier(layer_sizes=(4, 5, 2), activation="sigmoid")
        clone = MlpClassifier(**model.get_params())
        assert clone.get_params() == model.get_params()

    def test_dimension_mismatch_rejected(self):
        model = MlpClassifier(layer_sizes=(4, 2))
        with pytest.raises(ValidationError):
            model.probs_at(np.zeros((2, 3)), np.zeros(8))
