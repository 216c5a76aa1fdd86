"""Dense ReLU network with a softmax cross-entropy head, trained by plain SGD.

Weight matrices are stored out x in, so each row is the feature detector of
one output unit and can be handed to the regularizer unchanged.
"""

import logging
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from orthoreg.core.errors import ConfigurationError, LabelRangeError, ShapeError
from orthoreg.data.dataset import Dataset
from orthoreg.services.anglestats import summarize
from orthoreg.services.linalg import Matrix, Vector, as_matrix
from orthoreg.services.records import RunRecord
from orthoreg.services.regularizer import RegConfig, configured_loss, reg_step

logger = logging.getLogger(__name__)


class Activation(StrEnum):
    RELU = "relu"
    SOFTMAX = "softmax"


@dataclass
class DenseLayer:
    weights: Matrix
    bias: Vector
    activation: Activation

    @property
    def fan_in(self):
        return self.weights.shape[1]

    @property
    def fan_out(self):
        return self.weights.shape[0]


@dataclass
class MlpModel:
    layers: list[DenseLayer]
    rng_seed: int = 0

    def __post_init__(self):
        if not self.layers:
            raise ConfigurationError("A model needs at least one layer.")
        for index, layer in enumerate(self.layers):
            if layer.bias.shape != (layer.fan_out,):
                raise ShapeError(f"Layer {index} bias does not match its weights.")
            if index and layer.fan_in != self.layers[index - 1].fan_out:
                raise ShapeError(
                    f"Layer {index} expects {layer.fan_in} inputs but layer "
                    f"{index - 1} produces {self.layers[index - 1].fan_out}."
                )
            expected = (
                Activation.SOFTMAX if index == len(self.layers) - 1 else Activation.RELU
            )
            if layer.activation != expected:
                raise ConfigurationError(
                    f"Layer {index} must use {expected.value} activation."
                )

    @property
    def layer_sizes(self):
        return [self.layers[0].fan_in] + [layer.fan_out for layer in self.layers]


@dataclass
class ForwardCache:
    inputs: list[Matrix]
    pre_activations: list[Matrix]


@dataclass
class LayerGrad:
    weights: Matrix
    bias: Vector


class TrainConfig(BaseModel):
    """SGD settings. learning_rate has no default on purpose."""

    model_config = ConfigDict(frozen=True)

    learning_rate: float = Field(gt=0)
    batch_size: int = Field(default=200, ge=1)
    epochs: int = Field(default=200, ge=1)
    reg: RegConfig = Field(default_factory=RegConfig)
    regularized_layers: tuple[int, ...] | None = None
    seed: int = 0
    angle_bins: int = Field(default=36, ge=1)
    eval_batch_size: int = Field(default=2000, ge=1)


def init_model(layer_sizes: list[int], seed: int) -> MlpModel:
    """Uniform fan-based init in ±sqrt(6 / (fan_in + fan_out)), zero biases."""
    sizes = [int(size) for size in layer_sizes]
    if len(sizes) < 2:
        raise ConfigurationError("layer_sizes needs an input and an output size.")
    if any(size < 1 for size in sizes):
        raise ConfigurationError(f"Layer sizes must be positive, got {sizes}.")
    rng = np.random.default_rng(seed)
    layers = []
    for index, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        last = index == len(sizes) - 2
        layers.append(
            DenseLayer(
                weights=rng.uniform(-limit, limit, size=(fan_out, fan_in)),
                bias=np.zeros(fan_out),
                activation=Activation.SOFTMAX if last else Activation.RELU,
            )
        )
    return MlpModel(layers=layers, rng_seed=seed)


def softmax(logits) -> Matrix:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def forward(model: MlpModel, batch) -> tuple[Matrix, ForwardCache]:
    """Return pre-softmax logits and the activations backward needs."""
    x = as_matrix(batch, "batch")
    if x.shape[1] != model.layers[0].fan_in:
        raise ShapeError(
            f"Batch has {x.shape[1]} features, model expects "
            f"{model.layers[0].fan_in}."
        )
    cache = ForwardCache(inputs=[], pre_activations=[])
    for layer in model.layers:
        cache.inputs.append(x)
        z = x @ layer.weights.T + layer.bias
        cache.pre_activations.append(z)
        x = np.maximum(z, 0.0) if layer.activation == Activation.RELU else z
    return x, cache


def _check_labels(labels, n_rows: int, n_classes: int):
    labels = np.asarray(labels)
    if labels.shape != (n_rows,):
        raise ShapeError(f"Got {labels.shape[0]} labels for {n_rows} rows.")
    if not np.issubdtype(labels.dtype, np.integer):
        raise LabelRangeError("Labels must be integers.")
    if np.any(labels < 0) or np.any(labels >= n_classes):
        raise LabelRangeError(f"Labels must lie in [0, {n_classes}).")
    return labels.astype(np.int64)


def cross_entropy(logits, labels) -> float:
    """Mean softmax cross-entropy."""
    labels = _check_labels(labels, logits.shape[0], logits.shape[1])
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(labels.shape[0]), labels]
    return float(np.mean(log_norm - picked))


def backward(model: MlpModel, cache: ForwardCache, labels) -> list[LayerGrad]:
    logits = cache.pre_activations[-1]
    n, k = logits.shape
    labels = _check_labels(labels, n, k)
    delta = softmax(logits)
    delta[np.arange(n), labels] -= 1.0
    delta /= n

    grads: list[LayerGrad] = []
    for index in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[index]
        grads.append(
            LayerGrad(weights=delta.T @ cache.inputs[index], bias=delta.sum(axis=0))
        )
        if index:
            delta = (delta @ layer.weights) * (cache.pre_activations[index - 1] > 0)
    grads.reverse()
    return grads


def batch_loss(model: MlpModel, batch, labels) -> float:
    logits, _ = forward(model, batch)
    return cross_entropy(logits, labels)


def evaluate(model: MlpModel, ds: Dataset, batch_size: int = 2000):
    """Mean cross-entropy and error percentage over a whole dataset."""
    total_loss = 0.0
    wrong = 0
    for start in range(0, ds.n_examples, batch_size):
        images = ds.images[start : start + batch_size]
        labels = ds.labels[start : start + batch_size]
        logits, _ = forward(model, images)
        total_loss += cross_entropy(logits, labels) * images.shape[0]
        wrong += int(np.sum(np.argmax(logits, axis=1) != labels))
    return total_loss / ds.n_examples, 100.0 * wrong / ds.n_examples


def _regularized_indices(model: MlpModel, cfg: TrainConfig):
    if cfg.regularized_layers is None:
        return set(range(len(model.layers)))
    indices = set(cfg.regularized_layers)
    bad = sorted(i for i in indices if not 0 <= i < len(model.layers))
    if bad:
        raise ConfigurationError(
            f"regularized_layers {bad} out of range for {len(model.layers)} layers."
        )
    return indices


def sgd_update(
    model: MlpModel, grads: list[LayerGrad], cfg: TrainConfig, regularized
):
    """Apply one step; regularized layers take the combined regularized update."""
    lr = cfg.learning_rate
    for index, (layer, grad) in enumerate(zip(model.layers, grads)):
        if index in regularized and cfg.reg.gamma > 0:
            layer.weights = reg_step(layer.weights, grad.weights, lr, cfg.reg)
        else:
            layer.weights = layer.weights - lr * grad.weights
        layer.bias = layer.bias - lr * grad.bias


def layer_angle_stats(model: MlpModel, n_bins: int = 36):
    return {
        f"l{index + 1}": summarize(layer.weights, n_bins)
        for index, layer in enumerate(model.layers)
        if layer.fan_out >= 2
    }


def _record(model, epoch, train_set, test_set, cfg, regularized):
    train_loss, train_err = evaluate(model, train_set, cfg.eval_batch_size)
    _, test_err = evaluate(model, test_set, cfg.eval_batch_size)
    reg_loss = sum(
        configured_loss(model.layers[index].weights, cfg.reg)
        for index in sorted(regularized)
    )
    return RunRecord(
        step=epoch,
        losses={"task": train_loss, "reg": float(reg_loss)},
        train_err_pct=train_err,
        test_err_pct=test_err,
        angle_stats=layer_angle_stats(model, cfg.angle_bins),
    )


def train(
    model: MlpModel, train_set: Dataset, test_set: Dataset, cfg: TrainConfig
) -> list[RunRecord]:
    """Mini-batch SGD, in place on model. Returns records for epochs 0..epochs."""
    if train_set.n_examples == 0 or test_set.n_examples == 0:
        raise ConfigurationError("Training and test sets must be non-empty.")
    n_classes = model.layers[-1].fan_out
    train_set.check_labels(n_classes)
    test_set.check_labels(n_classes)
    regularized = _regularized_indices(model, cfg)
    rng = np.random.default_rng(cfg.seed)

    records = [_record(model, 0, train_set, test_set, cfg, regularized)]
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(train_set.n_examples)
        for start in range(0, train_set.n_examples, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            _, cache = forward(model, train_set.images[batch])
            grads = backward(model, cache, train_set.labels[batch])
            sgd_update(model, grads, cfg, regularized)
        record = _record(model, epoch, train_set, test_set, cfg, regularized)
        records.append(record)
        logger.info(
            "epoch_complete epoch=%s train_loss=%.5f reg_loss=%.5f "
            "train_err=%.2f test_err=%.2f mode=%s gamma=%s",
            epoch,
            record.losses["task"],
            record.losses["reg"],
            record.train_err_pct,
            record.test_err_pct,
            cfg.reg.mode.value,
            cfg.reg.gamma,
        )
    return records
