"""Tiny differentiable models: logistic regression and a one-hidden-layer
tanh MLP, with hand-derived gradients and the SGD step used by every
protocol.

Parameters live in flat float64 vectors (see fedsim.kernels for the
layouts). All functions are pure; none mutate their inputs.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidArgumentError

LOGISTIC = "logistic-regression"
MLP = "mlp-1hidden"


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    input_dim: int
    num_classes: int
    hidden_dim: int = 0

    def __post_init__(self):
        if self.kind not in (LOGISTIC, MLP):
            raise InvalidArgumentError(f"unknown model kind: {self.kind!r}")
        if self.input_dim < 1:
            raise InvalidArgumentError("input_dim must be positive")
        if self.num_classes < 2:
            raise InvalidArgumentError("num_classes must be >= 2")
        if self.kind == MLP and self.hidden_dim < 1:
            raise InvalidArgumentError("mlp-1hidden requires hidden_dim >= 1")
        if self.kind == LOGISTIC and self.hidden_dim != 0:
            raise InvalidArgumentError("logistic-regression requires hidden_dim == 0")

    @property
    def param_count(self):
        d, h, c = self.input_dim, self.hidden_dim, self.num_classes
        if self.kind == LOGISTIC:
            return d * c + c
        return d * h + h + h * c + c


@dataclass(frozen=True)
class Batch:
    inputs: np.ndarray  # (n, input_dim) float64
    labels: np.ndarray  # (n,) int64

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.labels.ndim != 1:
            raise InvalidArgumentError("batch inputs must be (n, d), labels (n,)")
        if len(self.inputs) != len(self.labels) or len(self.labels) == 0:
            raise InvalidArgumentError("batch inputs and labels must have equal nonzero length")

    def __len__(self):
        return len(self.labels)


def init_params(spec, rng):
    """Seeded uniform initialization on [-0.05, 0.05]."""
    return rng.uniform(-0.05, 0.05, size=spec.param_count)


def _check(spec, params, batch):
    if params.ndim != 1 or len(params) != spec.param_count:
        raise InvalidArgumentError(
            f"params has dim {params.shape}, spec requires {spec.param_count}"
        )
    if batch.inputs.shape[1] != spec.input_dim:
        raise InvalidArgumentError(
            f"batch input_dim {batch.inputs.shape[1]} != spec input_dim {spec.input_dim}"
        )


def loss(spec, params, batch):
    """Mean cross-entropy of the model on a batch."""
    _check(spec, params, batch)
    if spec.kind == LOGISTIC:
        return kernels.logreg_loss(params, batch.inputs, batch.labels, spec.num_classes)
    return kernels.mlp_loss(params, batch.inputs, batch.labels, spec.hidden_dim, spec.num_classes)


def grad(spec, params, batch):
    """Gradient of loss() with respect to params; same shape as params."""
    _check(spec, params, batch)
    if spec.kind == LOGISTIC:
        return kernels.logreg_grad(params, batch.inputs, batch.labels, spec.num_classes)
    return kernels.mlp_grad(params, batch.inputs, batch.labels, spec.hidden_dim, spec.num_classes)


def sgd_step(params, g, eta):
    """One SGD step: params - eta * g."""
    if params.shape != g.shape:
        raise InvalidArgumentError(f"params dim {params.shape} != gradient dim {g.shape}")
    if eta <= 0:
        raise InvalidArgumentError("eta must be positive")
    return params - eta * g


def logits(spec, params, inputs):
    _check(spec, params, Batch(inputs, np.zeros(len(inputs), dtype=np.int64)))
    if spec.kind == LOGISTIC:
        return kernels.logreg_logits(params, inputs, spec.num_classes)
    return kernels.mlp_logits(params, inputs, spec.hidden_dim, spec.num_classes)


def evaluate(spec, params, dataset):
    """(mean cross-entropy, accuracy) on a dataset.

    Argmax ties break toward the lowest class index, so the result is
    deterministic.
    """
    if len(dataset.labels) == 0:
        raise InvalidArgumentError("cannot evaluate on an empty dataset")
    batch = Batch(dataset.inputs, dataset.labels)
    z = logits(spec, params, dataset.inputs)
    predicted = np.argmax(z, axis=1)  # first max wins: lowest-index tie-break
    accuracy = float(np.mean(predicted == dataset.labels))
    return loss(spec, params, batch), accuracy
