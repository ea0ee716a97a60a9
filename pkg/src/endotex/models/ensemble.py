"""Ensembles over base classifiers: bagging, weighted voting, stacking.

Bagging draws each member's training set as a fraction of the rows with
replacement and combines members by summing their per-class probabilities
(renormalised), or by hard majority voting.  Weighted voting combines
already-trained models, each vote scaled by its held-out accuracy.  Stacking
concatenates member probability vectors and trains a small perceptron on top.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import derive_seed
from ..errors import (
    AllZeroWeights,
    ClassSetMismatch,
    EmptyMatrix,
    InvalidParameters,
    LengthMismatch,
    ShapeMismatch,
)
from .mlp import MlpModel, MlpParams


def _align_probs(model, X: np.ndarray, classes: np.ndarray) -> np.ndarray:
    """Member probabilities mapped into the ensemble's class frame.

    A member trained on a bag that missed some class contributes zero mass for
    it.
    """
    probs = model.predict_proba(X)
    member_classes = np.asarray(model.classes_)
    if np.array_equal(member_classes, classes):
        return probs
    if not np.isin(member_classes, classes).all():
        raise ClassSetMismatch(
            f"member classes {member_classes} outside ensemble set {classes}"
        )
    out = np.zeros((X.shape[0], classes.size))
    positions = np.searchsorted(classes, member_classes)
    out[:, positions] = probs
    return out


def sum_member_probabilities(prob_rows: list[np.ndarray]) -> np.ndarray:
    """Per-class probability sums across members, renormalised per row."""
    if not prob_rows:
        raise EmptyMatrix("no member probabilities to combine")
    acc = np.zeros_like(np.asarray(prob_rows[0], dtype=np.float64))
    for p in prob_rows:
        p = np.asarray(p, dtype=np.float64)
        if p.shape != acc.shape:
            raise ShapeMismatch(f"probability shapes differ: {p.shape} vs {acc.shape}")
        acc += p
    totals = acc.sum(axis=-1, keepdims=True)
    k = acc.shape[-1]
    return np.where(totals > 0, acc / np.where(totals > 0, totals, 1.0), 1.0 / k)


@dataclass
class BaggedModel:
    members: list
    classes_: np.ndarray
    vote: str = "soft"

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.vote == "soft":
            return sum_member_probabilities(
                [_align_probs(m, X, self.classes_) for m in self.members]
            )
        votes = np.zeros((X.shape[0], self.classes_.size))
        for m in self.members:
            pred = np.argmax(_align_probs(m, X, self.classes_), axis=1)
            votes[np.arange(X.shape[0]), pred] += 1.0
        return votes / len(self.members)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


def train_bagged(
    X,
    y,
    base_trainer,
    n_bags: int = 11,
    bag_fraction: float = 0.7,
    replace: bool = True,
    vote: str = "soft",
    seed: int = 0,
) -> BaggedModel:
    """Train ``n_bags`` members, each on a resampled fraction of the rows.

    ``base_trainer`` is any callable (X, y, seed) -> model exposing
    ``predict_proba`` and ``classes_``.  With ``bag_fraction = 1`` and
    ``replace = False`` every bag is the identity, so a single-bag ensemble
    reduces to the base model.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if n_bags < 1:
        raise InvalidParameters(f"n_bags must be >= 1, got {n_bags}")
    if not 0.0 < bag_fraction <= 1.0:
        raise InvalidParameters(f"bag fraction {bag_fraction} outside (0, 1]")
    if vote not in ("soft", "hard"):
        raise InvalidParameters(f"vote must be soft or hard, got {vote!r}")
    n = X.shape[0]
    size = max(1, int(round(bag_fraction * n)))
    members = []
    for i in range(n_bags):
        rng = np.random.default_rng(derive_seed(seed, "bag", i))
        if replace:
            idx = rng.integers(0, n, size=size)
        elif size == n:
            idx = np.arange(n)
        else:
            idx = rng.choice(n, size=size, replace=False)
        members.append(base_trainer(X[idx], y[idx], derive_seed(seed, "member", i)))
    classes = np.unique(y)
    return BaggedModel(members=members, classes_=classes, vote=vote)


def weighted_vote(predictions: list[np.ndarray], weights, n_classes: int) -> np.ndarray:
    """Combine label predictions: each model adds its weight to its chosen
    class; ties resolve to the lowest class index."""
    if len(predictions) != len(weights):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(weights)} weights")
    weights = np.asarray(weights, dtype=np.float64)
    if weights.sum() <= 0:
        raise AllZeroWeights("voting weights sum to zero")
    preds = [np.asarray(p, dtype=np.int64) for p in predictions]
    n = preds[0].shape[0]
    for p in preds:
        if p.shape[0] != n:
            raise LengthMismatch("prediction vectors differ in length")
    scores = np.zeros((n, n_classes))
    for p, w in zip(preds, weights):
        scores[np.arange(n), p] += w
    return np.argmax(scores, axis=1)


@dataclass
class VotingModel:
    """Heterogeneous models voting with accuracy-derived weights."""

    members: list
    weights: np.ndarray
    classes_: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        member_votes = []
        for m in self.members:
            probs = _align_probs(m, X, self.classes_)
            member_votes.append(np.argmax(probs, axis=1))
        winners = weighted_vote(member_votes, self.weights, self.classes_.size)
        return self.classes_[winners]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Weight-normalised vote shares (a coarse probability surrogate)."""
        X = np.asarray(X, dtype=np.float64)
        scores = np.zeros((X.shape[0], self.classes_.size))
        for m, w in zip(self.members, self.weights):
            probs = _align_probs(m, X, self.classes_)
            pred = np.argmax(probs, axis=1)
            scores[np.arange(X.shape[0]), pred] += w
        return scores / self.weights.sum()


def train_weighted_ensemble(members: list, X_val, y_val) -> VotingModel:
    """Weight every pre-trained member by its accuracy on held-out data."""
    X_val = np.asarray(X_val, dtype=np.float64)
    y_val = np.asarray(y_val, dtype=np.int64)
    if not members:
        raise EmptyMatrix("no members to weight")
    classes = np.unique(np.concatenate([np.asarray(m.classes_) for m in members]))
    weights = []
    for m in members:
        pred = classes[np.argmax(_align_probs(m, X_val, classes), axis=1)]
        weights.append(float((pred == y_val).mean()))
    weights = np.asarray(weights)
    if weights.sum() <= 0:
        raise AllZeroWeights("every member scored zero accuracy on the held-out set")
    return VotingModel(members=members, weights=weights, classes_=classes)


@dataclass
class StackedModel:
    """Members' probability vectors concatenated into a meta-classifier."""

    members: list
    meta: MlpModel
    classes_: np.ndarray

    def _meta_features(self, X: np.ndarray) -> np.ndarray:
        return np.hstack([_align_probs(m, X, self.classes_) for m in self.members])

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.meta.predict_proba(self._meta_features(np.asarray(X, np.float64)))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


def train_stacked(
    members: list,
    X,
    y,
    seed: int = 0,
    meta_params: MlpParams | None = None,
) -> StackedModel:
    """Fit the meta-perceptron on member probabilities for (X, y)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if not members:
        raise EmptyMatrix("no members to stack")
    classes = np.unique(np.concatenate([np.asarray(m.classes_) for m in members]))
    meta_in = np.hstack([_align_probs(m, X, classes) for m in members])
    meta = MlpModel(meta_params or MlpParams(epochs=100), classes)
    meta.fit(meta_in, y, seed)
    return StackedModel(members=members, meta=meta, classes_=classes)
