"""Layered forest cascade: stacked layers of forests fed class probabilities.

Layer 0 trains its forests on the raw feature matrix.  Every later layer sees
the original features concatenated with the previous layer's per-forest class
probabilities, so information flows strictly forward; the final prediction is
the mean of the last layer's forest probabilities.  Per-forest seeds depend
only on (seed, layer, forest), which makes training bit-reproducible and means
appending layers never perturbs the ones already built.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import derive_seed
from .errors import InvalidParameters, IoFailure, MissingClassInstance
from .models.io import model_from_dict, model_to_dict, register_model
from .models.trees import Forest, ForestParams, train_forest

EXPERIMENT_COLUMNS = ("Chunk", "Size", "Time", "Acc", "P", "R", "MCC", "F1")


@dataclass
class CascadeParams:
    layers: int = 3
    forests_per_layer: int = 5
    trees_per_forest: int = 50
    max_depth: int = 20
    min_samples_split: int = 2

    def forest_params(self) -> ForestParams:
        return ForestParams(
            n_trees=self.trees_per_forest,
            max_depth=self.max_depth,
            min_samples_split=self.min_samples_split,
        )


@dataclass
class CascadeModel:
    params: CascadeParams
    classes_: np.ndarray
    layers: list[list[Forest]] = field(default_factory=list)

    def _layer_output(self, forests: list[Forest], X: np.ndarray) -> np.ndarray:
        return np.hstack([f.predict_proba(X) for f in forests])

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        aug = X
        probs = None
        for forests in self.layers:
            probs = self._layer_output(forests, aug)
            aug = np.hstack([X, probs])
        k = self.classes_.size
        stacked = probs.reshape(X.shape[0], -1, k)
        return stacked.mean(axis=1)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def to_dict(self) -> dict:
        return {
            "params": {
                "layers": self.params.layers,
                "forests_per_layer": self.params.forests_per_layer,
                "trees_per_forest": self.params.trees_per_forest,
                "max_depth": self.params.max_depth,
                "min_samples_split": self.params.min_samples_split,
            },
            "classes": self.classes_.tolist(),
            "layers": [[model_to_dict(f) for f in layer] for layer in self.layers],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CascadeModel":
        model = cls(CascadeParams(**data["params"]), np.array(data["classes"]))
        model.layers = [
            [model_from_dict(f) for f in layer] for layer in data["layers"]
        ]
        return model


register_model("cascade", CascadeModel, CascadeModel.from_dict)


def train_cascade(
    X, y, seed: int = 0, params: CascadeParams | None = None
) -> CascadeModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    params = params or CascadeParams()
    if params.layers < 1 or params.forests_per_layer < 1:
        raise InvalidParameters("cascade needs at least one layer and one forest")
    classes = np.unique(y)
    model = CascadeModel(params, classes)
    fp = params.forest_params()
    aug = X
    for li in range(params.layers):
        forests = [
            train_forest(aug, y, derive_seed(seed, "layer", li, fi), fp)
            for fi in range(params.forests_per_layer)
        ]
        model.layers.append(forests)
        probs = model._layer_output(forests, aug)
        aug = np.hstack([X, probs])
    return model


def stratified_fraction(
    y: np.ndarray, fraction: float, seed: int
) -> np.ndarray:
    """Row indices of a per-class subsample: round(fraction * count), at
    least one row per class."""
    if not 0.0 < fraction <= 1.0:
        raise InvalidParameters(f"fraction {fraction} outside (0, 1]")
    y = np.asarray(y)
    if y.size == 0:
        raise MissingClassInstance("no rows, so no class has an instance")
    picked = []
    for idx, c in enumerate(np.unique(y)):
        rows = np.nonzero(y == c)[0]
        take = max(1, int(round(fraction * rows.size)))
        rng = np.random.default_rng(derive_seed(seed, "fraction", idx))
        picked.append(rng.choice(rows, size=take, replace=False))
    return np.sort(np.concatenate(picked))


def data_fraction_experiment(
    X_train,
    y_train,
    X_test,
    y_test,
    fractions=(1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.01),
    params: CascadeParams | None = None,
    seed: int = 0,
) -> list[dict]:
    """Train one cascade per training-set fraction and score it on a fixed
    test split.

    Each row reports the chunk number (1-based), subsample size, training
    wall-clock seconds, and weighted test metrics.
    """
    from .evaluation import evaluate_predictions

    X_train = np.asarray(X_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.int64)
    rows = []
    for chunk, fraction in enumerate(fractions, start=1):
        idx = stratified_fraction(y_train, fraction, derive_seed(seed, "chunk", chunk))
        t0 = time.perf_counter()
        model = train_cascade(X_train[idx], y_train[idx], derive_seed(seed, "train", chunk), params)
        elapsed = time.perf_counter() - t0
        report = evaluate_predictions(y_test, model.predict(X_test))
        rows.append({
            "Chunk": chunk,
            "Size": int(idx.size),
            "Time": round(elapsed, 3),
            "Acc": round(report.accuracy, 4),
            "P": round(report.weighted["precision"], 4),
            "R": round(report.weighted["recall"], 4),
            "MCC": round(report.mcc, 4),
            "F1": round(report.weighted["f1"], 4),
        })
    return rows


def save_experiment_csv(rows: list[dict], path: str | Path) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=EXPERIMENT_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
