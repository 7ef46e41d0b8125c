"""Feature standardization and the multi-class softmax perceptron.

The classifier is f(u) = Softmax(W u + b), trained on cross-entropy with
mini-batch AdaGrad.  The same trainer runs on annealing features and,
for the linear baseline, directly on the compressed inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError


class Standardizer:
    """Per-feature (u - mean) / std with training statistics.

    Population (1/n) variance convention; zero-variance features keep
    std 1 so they map to 0.
    """

    def __init__(self):
        self.mean = None
        self.std = None

    @property
    def fitted(self):
        return self.mean is not None

    def fit(self, features):
        features = np.asarray(features, dtype=float)
        self.mean = features.mean(axis=0)
        std = features.std(axis=0)
        self.std = np.where(std == 0, 1.0, std)
        return self

    def transform(self, features):
        if not self.fitted:
            raise RuntimeError("standardizer used before fit")
        return (np.asarray(features, dtype=float) - self.mean) / self.std

    def fit_transform(self, features):
        return self.fit(features).transform(features)


@dataclass
class ClassifierParams:
    """Softmax weights plus AdaGrad accumulators and hyperparameters."""

    weights: np.ndarray       # (n_classes, n_features)
    bias: np.ndarray          # (n_classes,)
    grad_sq_w: np.ndarray
    grad_sq_b: np.ndarray
    learning_rate: float = 0.01
    batch_size: int = 32
    epochs: int = 200
    epsilon: float = 1e-8
    loss_trace: list[float] = field(default_factory=list)

    @classmethod
    def zeros(cls, n_classes, n_features, **hyper):
        """Zero-initialized parameters: the untrained model is uniform."""
        return cls(
            weights=np.zeros((n_classes, n_features)),
            bias=np.zeros(n_classes),
            grad_sq_w=np.zeros((n_classes, n_features)),
            grad_sq_b=np.zeros(n_classes),
            **hyper,
        )

    @property
    def n_classes(self):
        return self.weights.shape[0]


def one_hot(labels, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def forward(params: ClassifierParams, u) -> np.ndarray:
    """Class probabilities for one feature vector or a stack of them."""
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise NumericalError("non-finite feature input")
    logits = u @ params.weights.T + params.bias
    logits = logits - logits.max(axis=-1, keepdims=True)
    np.exp(logits, out=logits)
    return logits / logits.sum(axis=-1, keepdims=True)


def _log_softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def train(params: ClassifierParams, features, targets, seed: int = 0) -> ClassifierParams:
    """Mini-batch AdaGrad on mean cross-entropy, in place.

    targets: (n, c) rows (one-hot for labeled data).  Each epoch reshuffles
    with the seeded generator; the loss trace records the mean training
    cross-entropy of each epoch.
    """
    features = np.asarray(features, dtype=float)
    targets = np.asarray(targets, dtype=float)
    n = features.shape[0]
    if n == 0:
        raise ConfigError("empty training set")
    rng = np.random.default_rng(seed)
    eta, eps, bs = params.learning_rate, params.epsilon, params.batch_size

    for epoch in range(params.epochs):
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            u = features[idx]
            t = targets[idx]
            logits = u @ params.weights.T + params.bias
            logp = _log_softmax(logits)
            loss = -float(np.sum(t * logp)) / idx.shape[0]
            if not np.isfinite(loss):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch}, batch {start // bs}"
                )
            loss_sum += loss * idx.shape[0]
            delta = (np.exp(logp) - t) / idx.shape[0]
            grad_w = delta.T @ u
            grad_b = delta.sum(axis=0)
            params.grad_sq_w += grad_w**2
            params.grad_sq_b += grad_b**2
            params.weights -= eta * grad_w / (np.sqrt(params.grad_sq_w) + eps)
            params.bias -= eta * grad_b / (np.sqrt(params.grad_sq_b) + eps)
        params.loss_trace.append(loss_sum / n)
    return params


def evaluate(params: ClassifierParams, features, labels):
    """Accuracy and confusion counts; argmax ties go to the lowest class."""
    labels = np.asarray(labels, dtype=int)
    if labels.shape[0] == 0:
        raise ConfigError("empty evaluation set")
    probs = forward(params, features)
    pred = np.argmax(probs, axis=-1)
    confusion = np.zeros((params.n_classes, params.n_classes), dtype=int)
    np.add.at(confusion, (labels, pred), 1)
    accuracy = float(np.mean(pred == labels))
    return accuracy, confusion


def fit_and_score(train_features, train_labels, test_features, test_labels,
                  n_classes: int, seed: int = 0, **hyper):
    """Standardize on the training set, train, and score both splits.

    The one shared code path: annealing feature maps and the linear
    baseline differ only in the feature matrices passed in.
    """
    scaler = Standardizer()
    u_train = scaler.fit_transform(train_features)
    u_test = scaler.transform(test_features)
    params = ClassifierParams.zeros(n_classes, u_train.shape[1], **hyper)
    train(params, u_train, one_hot(train_labels, n_classes), seed=seed)
    train_acc, _ = evaluate(params, u_train, train_labels)
    test_acc, confusion = evaluate(params, u_test, test_labels)
    return {
        "params": params,
        "scaler": scaler,
        "train_accuracy": train_acc,
        "test_accuracy": test_acc,
        "confusion": confusion,
    }


def linear_baseline(train_features, train_labels, test_features, test_labels,
                    n_classes: int, seed: int = 0, **hyper):
    """The no-dynamics reference: the same pipeline on compressed inputs."""
    return fit_and_score(train_features, train_labels, test_features,
                         test_labels, n_classes, seed=seed, **hyper)


def save_params(path, params: ClassifierParams, seed=None):
    doc = {
        "shape": list(params.weights.shape),
        "weights": params.weights.ravel().tolist(),
        "bias": params.bias.tolist(),
        "grad_sq_w": params.grad_sq_w.ravel().tolist(),
        "grad_sq_b": params.grad_sq_b.tolist(),
        "hyperparameters": {
            "learning_rate": params.learning_rate,
            "batch_size": params.batch_size,
            "epochs": params.epochs,
            "epsilon": params.epsilon,
        },
        "seed": seed,
        "loss_trace": params.loss_trace,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_params(path) -> ClassifierParams:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    c, d = doc["shape"]
    return ClassifierParams(
        weights=np.asarray(doc["weights"], dtype=float).reshape(c, d),
        bias=np.asarray(doc["bias"], dtype=float),
        grad_sq_w=np.asarray(doc["grad_sq_w"], dtype=float).reshape(c, d),
        grad_sq_b=np.asarray(doc["grad_sq_b"], dtype=float),
        loss_trace=list(doc["loss_trace"]),
        **doc["hyperparameters"],
    )
