"""Multinomial logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyMatrix, NonFinite, ShapeMismatch, SingleClass


@dataclass
class LogisticParams:
    learning_rate: float = 0.5
    epochs: int = 300


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class LogisticModel:
    def __init__(self, params: LogisticParams, classes: np.ndarray):
        self.params = params
        self.classes_ = np.asarray(classes, dtype=np.int64)
        self.weights = None  # (d, K)
        self.bias = None     # (K,)

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LogisticModel":
        X = np.asarray(X, dtype=np.float64)
        n, d = X.shape
        k = self.classes_.size
        index = {c: i for i, c in enumerate(self.classes_)}
        onehot = np.zeros((n, k))
        onehot[np.arange(n), [index[c] for c in y]] = 1.0
        self.weights = np.zeros((d, k))
        self.bias = np.zeros(k)
        lr = self.params.learning_rate
        for _ in range(self.params.epochs):
            p = _softmax(X @ self.weights + self.bias)
            grad = (p - onehot) / n
            self.weights -= lr * (X.T @ grad)
            self.bias -= lr * grad.sum(axis=0)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise EmptyMatrix(f"prediction matrix shape {X.shape}")
        if X.shape[1] != self.weights.shape[0]:
            raise ShapeMismatch(
                f"{X.shape[1]} features vs model dimension {self.weights.shape[0]}"
            )
        return _softmax(X @ self.weights + self.bias)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def to_dict(self) -> dict:
        return {
            "params": {"learning_rate": self.params.learning_rate,
                       "epochs": self.params.epochs},
            "classes": self.classes_.tolist(),
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LogisticModel":
        model = cls(LogisticParams(**data["params"]), np.array(data["classes"]))
        model.weights = np.asarray(data["weights"], dtype=np.float64)
        model.bias = np.asarray(data["bias"], dtype=np.float64)
        return model


def train_logistic(
    X, y, seed: int = 0, params: LogisticParams | None = None
) -> LogisticModel:
    """Seed accepted for interface symmetry; the zero init makes it unused."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise EmptyMatrix(f"training matrix shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ShapeMismatch(f"{X.shape[0]} rows vs {y.shape} labels")
    if not np.isfinite(X).all():
        raise NonFinite("training matrix contains NaN or infinity")
    classes = np.unique(y)
    if classes.size < 2:
        raise SingleClass("training labels contain fewer than two classes")
    return LogisticModel(params or LogisticParams(), classes).fit(X, y)
