"""Three-layer perceptron with sigmoid per-class outputs.

Forward path: sigmoid(W3' relu(W2' relu(W1' x + b1) + b2) + b3).  The output
layer is one independent sigmoid per class trained with mean binary
cross-entropy, so raw scores live in [0, 1] without summing to 1;
``predict_proba`` renormalises them (argmax preserved) for interoperability
with the probability-averaging ensembles, while ``predict_scores`` exposes the
raw sigmoids for threshold-based decision rules.

Optimised with Nadam (Adam with Nesterov momentum): default betas 0.9/0.999,
epsilon 1e-8, learning rate 1e-4, minibatch 8.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import derive_seed
from ..errors import EmptyMatrix, NonFinite, ShapeMismatch, SingleClass


@dataclass
class MlpParams:
    hidden: tuple[int, int] = (64, 64)
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 8
    epochs: int = 500


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


class MlpModel:
    def __init__(self, params: MlpParams, classes: np.ndarray):
        self.params = params
        self.classes_ = np.asarray(classes, dtype=np.int64)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []

    # -- setup ------------------------------------------------------------

    def init_weights(self, input_dim: int, seed: int = 0) -> None:
        """Glorot-uniform weights, zero biases."""
        rng = np.random.default_rng(seed)
        dims = [input_dim, *self.params.hidden, self.classes_.size]
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    # -- forward / backward ------------------------------------------------

    def _forward(self, X: np.ndarray):
        z1 = X @ self.weights[0] + self.biases[0]
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ self.weights[1] + self.biases[1]
        a2 = np.maximum(z2, 0.0)
        z3 = a2 @ self.weights[2] + self.biases[2]
        return z1, a1, z2, a2, _sigmoid(z3)

    def loss_and_gradients(self, X: np.ndarray, onehot: np.ndarray):
        """Mean per-class binary cross-entropy and its analytic gradients.

        Returns (loss, weight gradients, bias gradients); gradient lists are
        ordered like ``weights``/``biases``.
        """
        n, k = onehot.shape
        z1, a1, z2, a2, p = self._forward(X)
        eps = 1e-12
        pc = np.clip(p, eps, 1.0 - eps)
        loss = float(
            -(onehot * np.log(pc) + (1.0 - onehot) * np.log(1.0 - pc)).mean()
        )
        dz3 = (p - onehot) / (n * k)
        gw3 = a2.T @ dz3
        gb3 = dz3.sum(axis=0)
        da2 = dz3 @ self.weights[2].T
        dz2 = da2 * (z2 > 0)
        gw2 = a1.T @ dz2
        gb2 = dz2.sum(axis=0)
        da1 = dz2 @ self.weights[1].T
        dz1 = da1 * (z1 > 0)
        gw1 = X.T @ dz1
        gb1 = dz1.sum(axis=0)
        return loss, [gw1, gw2, gw3], [gb1, gb2, gb3]

    # -- training -----------------------------------------------------------

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int = 0) -> "MlpModel":
        X = np.asarray(X, dtype=np.float64)
        n = X.shape[0]
        index = {c: i for i, c in enumerate(self.classes_)}
        onehot = np.zeros((n, self.classes_.size))
        onehot[np.arange(n), [index[c] for c in y]] = 1.0
        if not self.weights:
            self.init_weights(X.shape[1], seed)
        rng = np.random.default_rng(derive_seed(seed, "shuffle"))
        p = self.params
        m_w = [np.zeros_like(w) for w in self.weights]
        v_w = [np.zeros_like(w) for w in self.weights]
        m_b = [np.zeros_like(b) for b in self.biases]
        v_b = [np.zeros_like(b) for b in self.biases]
        t = 0
        for _ in range(p.epochs):
            order = rng.permutation(n)
            for start in range(0, n, p.batch_size):
                batch = order[start : start + p.batch_size]
                _, gws, gbs = self.loss_and_gradients(X[batch], onehot[batch])
                t += 1
                bc1 = 1.0 - p.beta1**t
                bc2 = 1.0 - p.beta2**t
                for i in range(3):
                    for g, m, v, theta in (
                        (gws[i], m_w, v_w, self.weights),
                        (gbs[i], m_b, v_b, self.biases),
                    ):
                        m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * g
                        v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * g * g
                        m_hat = m[i] / bc1
                        v_hat = v[i] / bc2
                        step = (p.beta1 * m_hat + (1.0 - p.beta1) * g / bc1) / (
                            np.sqrt(v_hat) + p.epsilon
                        )
                        theta[i] = theta[i] - p.learning_rate * step
        return self

    # -- prediction -----------------------------------------------------------

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        """Raw per-class sigmoid outputs in [0, 1]."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise EmptyMatrix(f"prediction matrix shape {X.shape}")
        if X.shape[1] != self.weights[0].shape[0]:
            raise ShapeMismatch(
                f"{X.shape[1]} features vs model dimension {self.weights[0].shape[0]}"
            )
        return self._forward(X)[4]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Scores renormalised to sum to 1 per row (uniform if all zero)."""
        s = self.predict_scores(X)
        totals = s.sum(axis=1, keepdims=True)
        k = s.shape[1]
        return np.where(totals > 0, s / np.where(totals > 0, totals, 1.0), 1.0 / k)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_scores(X), axis=1)]

    # -- serialisation -----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "params": {
                "hidden": list(self.params.hidden),
                "learning_rate": self.params.learning_rate,
                "beta1": self.params.beta1,
                "beta2": self.params.beta2,
                "epsilon": self.params.epsilon,
                "batch_size": self.params.batch_size,
                "epochs": self.params.epochs,
            },
            "classes": self.classes_.tolist(),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MlpModel":
        params = dict(data["params"])
        params["hidden"] = tuple(params["hidden"])
        model = cls(MlpParams(**params), np.array(data["classes"]))
        model.weights = [np.asarray(w, dtype=np.float64) for w in data["weights"]]
        model.biases = [np.asarray(b, dtype=np.float64) for b in data["biases"]]
        return model


def train_mlp(X, y, seed: int = 0, params: MlpParams | None = None) -> MlpModel:
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
    return MlpModel(params or MlpParams(), classes).fit(X, y, seed)
