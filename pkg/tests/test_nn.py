import statistics

import numpy as np
import pytest
from pydantic import ValidationError

from orthoreg.core.errors import ConfigurationError, LabelRangeError, ShapeError
from orthoreg.services.gradcheck import central_difference, relative_error
from orthoreg.services.nn import (
    Activation,
    DenseLayer,
    MlpModel,
    TrainConfig,
    backward,
    batch_loss,
    evaluate,
    forward,
    init_model,
    softmax,
    train,
)
from orthoreg.services.regularizer import RegConfig, RegMode


def _zero_model(sizes):
    layers = []
    for index, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        last = index == len(sizes) - 2
        layers.append(
            DenseLayer(
                np.zeros((fan_out, fan_in)),
                np.zeros(fan_out),
                Activation.SOFTMAX if last else Activation.RELU,
            )
        )
    return MlpModel(layers)


def test_init_model_is_deterministic():
    first = init_model([4, 3, 2], seed=5)
    second = init_model([4, 3, 2], seed=5)
    for a, b in zip(first.layers, second.layers):
        assert a.weights.tobytes() == b.weights.tobytes()
        assert a.bias.tobytes() == b.bias.tobytes()
    other = init_model([4, 3, 2], seed=6)
    assert not np.array_equal(first.layers[0].weights, other.layers[0].weights)


def test_init_model_bounds_and_shapes():
    model = init_model([10, 7, 3], seed=0)
    assert model.layer_sizes == [10, 7, 3]
    assert model.layers[0].weights.shape == (7, 10)
    assert model.layers[0].activation == Activation.RELU
    assert model.layers[1].activation == Activation.SOFTMAX
    limit = np.sqrt(6.0 / 17.0)
    assert np.all(np.abs(model.layers[0].weights) <= limit)
    assert np.all(model.layers[0].bias == 0.0)


def test_init_model_mnist_mlp_shape():
    model = init_model([1024, 1024, 1024, 1024, 10], seed=0)
    assert [layer.weights.shape for layer in model.layers] == [
        (1024, 1024),
        (1024, 1024),
        (1024, 1024),
        (10, 1024),
    ]


def test_init_model_rejects_bad_sizes():
    with pytest.raises(ConfigurationError):
        init_model([4], seed=0)
    with pytest.raises(ConfigurationError):
        init_model([4, 0, 2], seed=0)


def test_model_rejects_broken_chains():
    with pytest.raises(ShapeError):
        MlpModel(
            [
                DenseLayer(np.ones((3, 4)), np.zeros(3), Activation.RELU),
                DenseLayer(np.ones((2, 5)), np.zeros(2), Activation.SOFTMAX),
            ]
        )
    with pytest.raises(ConfigurationError):
        MlpModel([DenseLayer(np.ones((2, 4)), np.zeros(2), Activation.RELU)])


def test_forward_zero_model_gives_uniform_probabilities():
    logits, _ = forward(_zero_model([5, 4, 3]), np.ones((2, 5)))
    assert np.allclose(softmax(logits), 1.0 / 3.0)


def test_forward_identity_layer():
    model = MlpModel([DenseLayer(np.eye(3), np.zeros(3), Activation.SOFTMAX)])
    batch = np.eye(3)
    logits, cache = forward(model, batch)
    assert np.array_equal(logits, batch)
    assert len(cache.inputs) == 1


def test_softmax_rows_sum_to_one(rng):
    model = init_model([6, 5, 4], seed=1)
    logits, _ = forward(model, rng.standard_normal((9, 6)))
    assert logits.shape == (9, 4)
    assert np.allclose(softmax(logits).sum(axis=1), 1.0, atol=1e-12)


def test_forward_rejects_wrong_width():
    with pytest.raises(ShapeError):
        forward(init_model([6, 3], seed=0), np.ones((2, 5)))


def test_backward_matches_finite_differences(rng):
    model = init_model([6, 5, 4, 3], seed=2)
    batch = rng.standard_normal((7, 6))
    labels = rng.integers(0, 3, size=7)
    _, cache = forward(model, batch)
    grads = backward(model, cache, labels)

    for index, layer in enumerate(model.layers):

        def loss_for_weights(w, layer=layer):
            original = layer.weights
            layer.weights = w
            try:
                return batch_loss(model, batch, labels)
            finally:
                layer.weights = original

        def loss_for_bias(b, layer=layer):
            original = layer.bias
            layer.bias = b[0]
            try:
                return batch_loss(model, batch, labels)
            finally:
                layer.bias = original

        numeric_w = central_difference(loss_for_weights, layer.weights, 1e-6)
        numeric_b = central_difference(loss_for_bias, layer.bias[None, :], 1e-6)[0]
        assert relative_error(numeric_w, grads[index].weights) < 1e-4, index
        assert relative_error(numeric_b, grads[index].bias) < 1e-4, index


def test_backward_uses_mean_reduction(rng):
    model = init_model([4, 3, 2], seed=3)
    row = rng.standard_normal((1, 4))
    _, single = forward(model, row)
    _, doubled = forward(model, np.vstack([row, row]))
    one = backward(model, single, [1])
    two = backward(model, doubled, [1, 1])
    for a, b in zip(one, two):
        assert np.allclose(a.weights, b.weights, atol=1e-15)
        assert np.allclose(a.bias, b.bias, atol=1e-15)


def test_backward_zero_model_output_bias():
    model = _zero_model([3, 4, 3])
    labels = np.array([0, 2, 2, 1])
    _, cache = forward(model, np.ones((4, 3)))
    grads = backward(model, cache, labels)
    one_hot = np.eye(3)[labels]
    assert np.allclose(grads[-1].bias, (1.0 / 3.0 - one_hot).mean(axis=0))


def test_backward_rejects_bad_labels():
    model = init_model([3, 2], seed=0)
    _, cache = forward(model, np.ones((2, 3)))
    with pytest.raises(LabelRangeError):
        backward(model, cache, [0, 2])
    with pytest.raises(ShapeError):
        backward(model, cache, [0])


def test_train_config_validation():
    with pytest.raises(ValidationError):
        TrainConfig(learning_rate=0.1, batch_size=0)
    with pytest.raises(ValidationError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValidationError):
        TrainConfig(learning_rate=0.1, epochs=0)


def test_train_emits_one_record_per_epoch_plus_initial(blobs):
    train_set, test_set = blobs
    cfg = TrainConfig(learning_rate=0.05, batch_size=30, epochs=3)
    records = train(init_model([6, 8, 3], seed=0), train_set, test_set, cfg)
    assert [r.step for r in records] == [0, 1, 2, 3]
    for record in records:
        assert 0.0 <= record.train_err_pct <= 100.0
        assert 0.0 <= record.test_err_pct <= 100.0
        assert set(record.angle_stats) == {"l1", "l2"}
    assert records[-1].losses["task"] < records[0].losses["task"]


def test_train_is_deterministic(blobs):
    train_set, test_set = blobs
    cfg = TrainConfig(
        learning_rate=0.05,
        batch_size=25,
        epochs=2,
        reg=RegConfig(mode=RegMode.LOCAL, gamma=0.5),
    )
    first = train(init_model([6, 8, 8, 3], seed=4), train_set, test_set, cfg)
    second = train(init_model([6, 8, 8, 3], seed=4), train_set, test_set, cfg)
    assert first == second


def test_zero_gamma_matches_disabled_regularizer(blobs):
    train_set, test_set = blobs
    zero = TrainConfig(learning_rate=0.05, batch_size=30, epochs=2)
    disabled = TrainConfig(
        learning_rate=0.05,
        batch_size=30,
        epochs=2,
        reg=RegConfig(gamma=1.0),
        regularized_layers=(),
    )
    a = init_model([6, 8, 3], seed=1)
    b = init_model([6, 8, 3], seed=1)
    records_a = train(a, train_set, test_set, zero)
    records_b = train(b, train_set, test_set, disabled)
    assert [r.losses["task"] for r in records_a] == [
        r.losses["task"] for r in records_b
    ]
    for la, lb in zip(a.layers, b.layers):
        assert np.array_equal(la.weights, lb.weights)


def test_local_regularization_spreads_first_layer(blobs):
    train_set, test_set = blobs
    plain, regularized = [], []
    for seed in range(3):
        for gamma, sink in ((0.0, plain), (1.0, regularized)):
            cfg = TrainConfig(
                learning_rate=0.05,
                batch_size=30,
                epochs=5,
                seed=seed,
                reg=RegConfig(mode=RegMode.LOCAL, gamma=gamma, lam=10.0),
            )
            model = init_model([6, 16, 16, 3], seed=seed)
            records = train(model, train_set, test_set, cfg)
            sink.append(records[-1].mean_nn_angle("l1"))
    assert statistics.median(regularized) >= statistics.median(plain)


def test_train_rejects_bad_layer_selection(blobs):
    train_set, test_set = blobs
    cfg = TrainConfig(learning_rate=0.05, epochs=1, regularized_layers=(5,))
    with pytest.raises(ConfigurationError):
        train(init_model([6, 4, 3], seed=0), train_set, test_set, cfg)


def test_evaluate_reports_percentages(blobs):
    _, test_set = blobs
    loss, err = evaluate(init_model([6, 4, 3], seed=0), test_set, batch_size=7)
    assert loss > 0.0
    assert 0.0 <= err <= 100.0
