"""A small differentiable classifier for exercising the attacks.

Multinomial logistic regression on l2-normalized inputs. Normalizing first
matters: it puts the decision surface on the unit sphere, the same manifold
the trace-distance attack walks on, so its tangent-space gradients are
meaningful. Any object with predict_probs, loss_gradient, and a temperature
attribute can stand in for it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .datasets import SampleSet
from .errors import (
    DegenerateLabels,
    DimensionError,
    DomainError,
    FormatError,
    InvalidSample,
    ZeroNormSample,
)
from .metrics import normalized_rows

_LOG_FLOOR = 1e-300


def softmax_temperature(z, t: float):
    """Softmax of z / t, computed with max subtraction for stability.

    Accepts a single logit vector or a batch (last axis = classes). Small t
    sharpens the output toward one-hot.
    """
    if not t > 0:
        raise DomainError(f"temperature must be positive, got {t}")
    logits = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(logits)):
        raise InvalidSample("logits contain non-finite entries")
    shifted = (logits - logits.max(axis=-1, keepdims=True)) / t
    weights = np.exp(shifted)
    return weights / weights.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class LogisticClassifier:
    """weights: classes x features; bias: classes; predictions on x/||x||."""

    weights: np.ndarray
    bias: np.ndarray
    temperature: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.bias, dtype=float)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise DimensionError(f"weights {w.shape} and bias {b.shape} are inconsistent")
        if not self.temperature > 0:
            raise DomainError(f"temperature must be positive, got {self.temperature}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dimension(self) -> int:
        return self.weights.shape[1]

    def with_temperature(self, t: float) -> "LogisticClassifier":
        return replace(self, temperature=float(t))

    def _direction(self, x) -> tuple[np.ndarray, float]:
        vec = np.asarray(x, dtype=float)
        norm = float(np.sqrt(np.sum(vec * vec)))
        if norm == 0.0:
            raise ZeroNormSample("cannot classify the zero vector")
        return vec / norm, norm

    def predict_probs(self, x) -> np.ndarray:
        u, _ = self._direction(x)
        return softmax_temperature(self.weights @ u + self.bias, self.temperature)

    def predict_batch(self, features) -> np.ndarray:
        u = normalized_rows(features)
        return softmax_temperature(u @ self.weights.T + self.bias, self.temperature)

    def loss(self, x, y: int) -> float:
        """Cross-entropy -log p_y at a single point."""
        probs = self.predict_probs(x)
        return float(-np.log(max(float(probs[int(y)]), _LOG_FLOOR)))

    def loss_gradient(self, x, y: int) -> np.ndarray:
        """Gradient of the cross-entropy at x for true label y.

        Chain rule through the normalization: with u = x/||x||, the input
        Jacobian is (I - u u^T)/||x||, applied to W^T (p - e_y)/t.
        """
        u, norm = self._direction(x)
        probs = softmax_temperature(self.weights @ u + self.bias, self.temperature)
        err = probs.copy()
        err[int(y)] -= 1.0
        g_u = self.weights.T @ err / self.temperature
        return (g_u - u * float(u @ g_u)) / norm

    def to_document(self) -> dict:
        return {
            "classes": self.num_classes,
            "dimension": self.dimension,
            "temperature": self.temperature,
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
        }

    @classmethod
    def from_document(cls, doc: dict) -> "LogisticClassifier":
        try:
            clf = cls(
                weights=np.asarray(doc["weights"], dtype=float),
                bias=np.asarray(doc["bias"], dtype=float),
                temperature=float(doc["temperature"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed classifier document: {exc}") from None
        if clf.num_classes != int(doc.get("classes", clf.num_classes)) or \
                clf.dimension != int(doc.get("dimension", clf.dimension)):
            raise FormatError("classifier document shape fields disagree with the weight matrix")
        return clf


def train_toy_classifier(train: SampleSet, temperature: float = 1.0,
                         learning_rate: float = 5.0, epochs: int = 300,
                         seed: int = 0) -> LogisticClassifier:
    """Full-batch gradient descent from zero-initialized weights.

    Deterministic: zero init plus full-batch updates leave nothing for the
    seed to randomize (it is accepted for interface stability). Zero epochs
    therefore yields uniform predictions.
    """
    labels = train.require_labels()
    classes = train.num_classes
    if np.unique(labels).size < 2:
        raise DegenerateLabels("training requires at least two distinct classes")
    if not temperature > 0:
        raise DomainError(f"temperature must be positive, got {temperature}")
    if epochs < 0:
        raise DomainError(f"epochs must be nonnegative, got {epochs}")
    del seed

    u = normalized_rows(train.features)
    onehot = np.zeros((train.n, classes))
    onehot[np.arange(train.n), labels] = 1.0
    w = np.zeros((classes, train.d))
    b = np.zeros(classes)
    for _ in range(epochs):
        probs = softmax_temperature(u @ w.T + b, temperature)
        err = (probs - onehot) / (train.n * temperature)
        w -= learning_rate * (err.T @ u)
        b -= learning_rate * err.sum(axis=0)
    return LogisticClassifier(weights=w, bias=b, temperature=temperature)
