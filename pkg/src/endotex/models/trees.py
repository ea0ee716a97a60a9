"""Greedy Gini decision trees and forests of them.

Trees split on the (feature, midpoint-threshold) pair minimising the weighted
Gini impurity of the children; features are scanned in ascending index order
and only strict improvements displace the incumbent, so training is fully
deterministic given the seed.  Forests bootstrap the rows per member, restrict
each split to a random sqrt(d) feature subset, and average leaf class
frequencies.  An extra-random mode draws one uniform threshold per candidate
feature instead of scanning midpoints (bootstrap off), trading bias for speed
and decorrelation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import derive_seed
from ..errors import EmptyMatrix, NonFinite, ShapeMismatch, SingleClass


@dataclass
class TreeParams:
    max_depth: int = 20
    min_samples_split: int = 2
    feature_subsample: int | str | None = None  # None, "sqrt", or a count
    extra_random: bool = False


@dataclass
class ForestParams:
    n_trees: int = 50
    max_depth: int = 20
    min_samples_split: int = 2
    bootstrap: bool = True
    feature_subsample: int | str | None = "sqrt"
    extra_random: bool = False


def _validate_training(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise EmptyMatrix(f"training matrix shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ShapeMismatch(f"{X.shape[0]} rows vs {y.shape} labels")
    if not np.isfinite(X).all():
        raise NonFinite("training matrix contains NaN or infinity")
    if np.unique(y).size < 2:
        raise SingleClass("training labels contain fewer than two classes")
    return X, y


def _n_candidates(d: int, subsample) -> int:
    if subsample is None:
        return d
    if subsample == "sqrt":
        return max(1, int(np.sqrt(d)))
    k = int(subsample)
    if k < 1 or k > d:
        raise ShapeMismatch(f"feature subsample {k} outside [1, {d}]")
    return k


class DecisionTree:
    """Array-backed CART-style tree; leaves hold class frequency vectors."""

    def __init__(self, params: TreeParams, classes: np.ndarray):
        self.params = params
        self.classes_ = np.asarray(classes, dtype=np.int64)
        self.feature: list[int] = []     # -1 marks a leaf
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.probs: list[np.ndarray | None] = []

    # -- training -------------------------------------------------------

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int = 0) -> "DecisionTree":
        X = np.asarray(X, dtype=np.float64)
        class_index = {c: i for i, c in enumerate(self.classes_)}
        yi = np.array([class_index[c] for c in y], dtype=np.int64)
        onehot = np.zeros((X.shape[0], self.classes_.size))
        onehot[np.arange(X.shape[0]), yi] = 1.0
        rng = np.random.default_rng(seed)
        self._grow(X, onehot, np.arange(X.shape[0]), 0, rng)
        self._finish()
        return self

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.probs.append(None)
        return len(self.feature) - 1

    def _grow(self, X, onehot, idx, depth, rng) -> int:
        node = self._new_node()
        counts = onehot[idx].sum(axis=0)
        n = idx.size
        pure = counts.max() == n
        if pure or depth >= self.params.max_depth or n < self.params.min_samples_split:
            self.probs[node] = counts / n
            return node
        split = self._best_split(X, onehot, idx, rng)
        if split is None:
            self.probs[node] = counts / n
            return node
        f, thr = split
        go_left = X[idx, f] <= thr
        left_idx, right_idx = idx[go_left], idx[~go_left]
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self._grow(X, onehot, left_idx, depth + 1, rng)
        self.right[node] = self._grow(X, onehot, right_idx, depth + 1, rng)
        return node

    def _best_split(self, X, onehot, idx, rng):
        d = X.shape[1]
        k = _n_candidates(d, self.params.feature_subsample)
        if k < d:
            features = np.sort(rng.choice(d, size=k, replace=False))
        else:
            features = np.arange(d)
        n = idx.size
        best = None
        best_score = np.inf
        sub = onehot[idx]
        total = sub.sum(axis=0)
        for f in features:
            xs = X[idx, f]
            if self.params.extra_random:
                lo, hi = xs.min(), xs.max()
                if lo == hi:
                    continue
                thr = float(rng.uniform(lo, hi))
                left_mask = xs <= thr
                nl = int(left_mask.sum())
                if nl == 0 or nl == n:
                    continue
                lc = sub[left_mask].sum(axis=0)
                rc = total - lc
                score = (
                    nl * (1.0 - ((lc / nl) ** 2).sum())
                    + (n - nl) * (1.0 - ((rc / (n - nl)) ** 2).sum())
                ) / n
                if score < best_score:
                    best_score = score
                    best = (int(f), thr)
                continue
            order = np.argsort(xs, kind="stable")
            xs_sorted = xs[order]
            boundaries = np.nonzero(xs_sorted[1:] != xs_sorted[:-1])[0]
            if boundaries.size == 0:
                continue
            cum = np.cumsum(sub[order], axis=0)
            lc = cum[boundaries]                    # (m, K) left counts
            nl = (boundaries + 1).astype(np.float64)
            nr = n - nl
            rc = total - lc
            gini_l = 1.0 - ((lc / nl[:, None]) ** 2).sum(axis=1)
            gini_r = 1.0 - ((rc / nr[:, None]) ** 2).sum(axis=1)
            scores = (nl * gini_l + nr * gini_r) / n
            am = int(np.argmin(scores))
            if scores[am] < best_score:
                best_score = float(scores[am])
                b = boundaries[am]
                best = (int(f), float((xs_sorted[b] + xs_sorted[b + 1]) / 2.0))
        return best

    def _finish(self):
        self._feature = np.asarray(self.feature, dtype=np.int64)
        self._threshold = np.asarray(self.threshold, dtype=np.float64)
        self._left = np.asarray(self.left, dtype=np.int64)
        self._right = np.asarray(self.right, dtype=np.int64)
        k = self.classes_.size
        self._probs = np.vstack(
            [p if p is not None else np.zeros(k) for p in self.probs]
        )
        # plain Python mirrors for the fast single-sample path
        self._py_nodes = list(
            zip(self.feature, self.threshold, self.left, self.right)
        )
        self._py_probs = [row for row in self._probs]

    # -- prediction -----------------------------------------------------

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise EmptyMatrix(f"prediction matrix shape {X.shape}")
        if X.shape[0] <= 8:
            return np.vstack([self._predict_one(row) for row in X])
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self._feature[node] >= 0
        while active.any():
            cur = node[active]
            f = self._feature[cur]
            go_left = X[rows[active], f] <= self._threshold[cur]
            node[active] = np.where(go_left, self._left[cur], self._right[cur])
            active = self._feature[node] >= 0
        return self._probs[node]

    def _predict_one(self, row: np.ndarray) -> np.ndarray:
        nodes = self._py_nodes
        i = 0
        f, thr, left, right = nodes[0]
        while f >= 0:
            i = left if row[f] <= thr else right
            f, thr, left, right = nodes[i]
        return self._py_probs[i]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    # -- serialisation ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "params": {
                "max_depth": self.params.max_depth,
                "min_samples_split": self.params.min_samples_split,
                "feature_subsample": self.params.feature_subsample,
                "extra_random": self.params.extra_random,
            },
            "classes": self.classes_.tolist(),
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "probs": self._probs.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionTree":
        tree = cls(TreeParams(**data["params"]), np.array(data["classes"]))
        tree.feature = list(data["feature"])
        tree.threshold = list(data["threshold"])
        tree.left = list(data["left"])
        tree.right = list(data["right"])
        tree.probs = [np.asarray(p, dtype=np.float64) for p in data["probs"]]
        tree._finish()
        return tree


def train_tree(X, y, seed: int = 0, params: TreeParams | None = None) -> DecisionTree:
    X, y = _validate_training(X, y)
    params = params or TreeParams()
    classes = np.unique(y)
    return DecisionTree(params, classes).fit(X, y, seed)


class Forest:
    """Average of independently grown trees."""

    def __init__(self, params: ForestParams, classes: np.ndarray):
        self.params = params
        self.classes_ = np.asarray(classes, dtype=np.int64)
        self.trees: list[DecisionTree] = []

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int = 0) -> "Forest":
        n = X.shape[0]
        tree_params = TreeParams(
            max_depth=self.params.max_depth,
            min_samples_split=self.params.min_samples_split,
            feature_subsample=self.params.feature_subsample,
            extra_random=self.params.extra_random,
        )
        self.trees = []
        for i in range(self.params.n_trees):
            tseed = derive_seed(seed, "tree", i)
            rng = np.random.default_rng(derive_seed(seed, "bag", i))
            if self.params.bootstrap:
                idx = rng.integers(0, n, size=n)
            else:
                idx = np.arange(n)
            tree = DecisionTree(tree_params, self.classes_)
            tree.fit(X[idx], y[idx], tseed)
            self.trees.append(tree)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        acc = self.trees[0].predict_proba(X).copy()
        for tree in self.trees[1:]:
            acc += tree.predict_proba(X)
        return acc / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def to_dict(self) -> dict:
        return {
            "params": {
                "n_trees": self.params.n_trees,
                "max_depth": self.params.max_depth,
                "min_samples_split": self.params.min_samples_split,
                "bootstrap": self.params.bootstrap,
                "feature_subsample": self.params.feature_subsample,
                "extra_random": self.params.extra_random,
            },
            "classes": self.classes_.tolist(),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Forest":
        forest = cls(ForestParams(**data["params"]), np.array(data["classes"]))
        forest.trees = [DecisionTree.from_dict(t) for t in data["trees"]]
        return forest


def train_forest(X, y, seed: int = 0, params: ForestParams | None = None) -> Forest:
    X, y = _validate_training(X, y)
    params = params or ForestParams()
    classes = np.unique(y)
    return Forest(params, classes).fit(X, y, seed)
