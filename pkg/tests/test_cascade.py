import csv

import numpy as np
import pytest

from endotex.cascade import (
    EXPERIMENT_COLUMNS,
    CascadeModel,
    CascadeParams,
    data_fraction_experiment,
    save_experiment_csv,
    stratified_fraction,
    train_cascade,
)
from endotex.errors import InvalidParameters, MissingClassInstance
from endotex.models.io import model_from_dict, model_to_dict

FAST = CascadeParams(layers=2, forests_per_layer=2, trees_per_forest=5, max_depth=6)


class TestTraining:
    def test_forward_only_layer_growth(self, tiny_features):
        # a deeper cascade's early layers serialize identically to a
        # shallower one's: appending layers never retrains what exists
        X, y = tiny_features
        two = train_cascade(X, y, seed=3, params=FAST)
        three = train_cascade(
            X, y, seed=3,
            params=CascadeParams(layers=3, forests_per_layer=2,
                                 trees_per_forest=5, max_depth=6),
        )
        d2 = two.to_dict()["layers"]
        d3 = three.to_dict()["layers"]
        assert d3[:2] == d2

    def test_layer_input_dimensions(self, tiny_features):
        X, y = tiny_features
        model = train_cascade(X, y, seed=0, params=FAST)
        d = X.shape[1]
        k = model.classes_.size
        # layer 0 trees split on raw features only
        for forest in model.layers[0]:
            for tree in forest.trees:
                feats = tree._feature[tree._feature >= 0]
                assert (feats < d).all()
        # layer 1 may also split on the 2 forests x k probability columns
        for forest in model.layers[1]:
            for tree in forest.trees:
                feats = tree._feature[tree._feature >= 0]
                assert (feats < d + 2 * k).all()

    def test_determinism(self, tiny_features):
        X, y = tiny_features
        a = train_cascade(X, y, seed=1, params=FAST)
        b = train_cascade(X, y, seed=1, params=FAST)
        assert a.to_dict() == b.to_dict()

    def test_fits_training_data(self, tiny_features):
        X, y = tiny_features
        model = train_cascade(X, y, seed=0, params=FAST)
        assert (model.predict(X) == y).mean() > 0.9

    def test_validation(self, tiny_features):
        X, y = tiny_features
        with pytest.raises(InvalidParameters):
            train_cascade(X, y, params=CascadeParams(layers=0))
        with pytest.raises(InvalidParameters):
            train_cascade(X, y, params=CascadeParams(forests_per_layer=0))


class TestPrediction:
    def test_proba_rows_sum_to_one(self, tiny_features, rng):
        X, y = tiny_features
        model = train_cascade(X, y, seed=0, params=FAST)
        probs = model.predict_proba(rng.random((9, X.shape[1])))
        assert probs.shape == (9, model.classes_.size)
        assert np.allclose(probs.sum(axis=1), 1.0)

    def test_proba_is_last_layer_mean(self, tiny_features, rng):
        X, y = tiny_features
        model = train_cascade(X, y, seed=0, params=FAST)
        probe = rng.random((5, X.shape[1]))
        # recompute by hand: walk the layers, average the last
        aug = probe
        for forests in model.layers:
            probs = np.hstack([f.predict_proba(aug) for f in forests])
            aug = np.hstack([probe, probs])
        k = model.classes_.size
        want = probs.reshape(5, -1, k).mean(axis=1)
        assert np.allclose(model.predict_proba(probe), want)

    def test_serialization_round_trip(self, tiny_features, rng):
        X, y = tiny_features
        model = train_cascade(X, y, seed=2, params=FAST)
        again = model_from_dict(model_to_dict(model))
        assert isinstance(again, CascadeModel)
        probe = rng.random((8, X.shape[1]))
        assert np.array_equal(model.predict_proba(probe), again.predict_proba(probe))


class TestStratifiedFraction:
    def test_per_class_rounding_and_floor(self):
        y = np.array([0] * 10 + [1] * 3 + [2] * 1)
        idx = stratified_fraction(y, 0.5, seed=0)
        counts = np.bincount(y[idx], minlength=3)
        assert counts[0] == 5
        assert counts[1] == 2  # round(1.5) banker's-rounds to 2
        assert counts[2] == 1  # floor of one row per class

    def test_tiny_fraction_keeps_every_class(self):
        y = np.repeat(np.arange(5), 20)
        idx = stratified_fraction(y, 0.01, seed=1)
        assert set(y[idx]) == set(range(5))
        assert idx.size == 5

    def test_indices_sorted_unique_and_label_preserving(self):
        y = np.repeat([0, 1], 30)
        idx = stratified_fraction(y, 0.4, seed=3)
        assert np.array_equal(idx, np.sort(idx))
        assert np.unique(idx).size == idx.size

    def test_determinism(self):
        y = np.repeat([0, 1, 2], 15)
        a = stratified_fraction(y, 0.3, seed=7)
        b = stratified_fraction(y, 0.3, seed=7)
        assert np.array_equal(a, b)

    def test_validation(self):
        with pytest.raises(InvalidParameters):
            stratified_fraction(np.array([0, 1]), 0.0, seed=0)
        with pytest.raises(InvalidParameters):
            stratified_fraction(np.array([0, 1]), 1.1, seed=0)


class TestExperiment:
    def test_rows_and_csv(self, tiny_features, tmp_path):
        X, y = tiny_features
        half = len(y) // 2
        rows = data_fraction_experiment(
            X[:half], y[:half], X[half:], y[half:],
            fractions=(1.0, 0.5), params=FAST, seed=0,
        )
        assert [r["Chunk"] for r in rows] == [1, 2]
        assert rows[0]["Size"] > rows[1]["Size"]
        for r in rows:
            assert set(r) == set(EXPERIMENT_COLUMNS)
            assert 0.0 <= r["Acc"] <= 1.0
            assert r["Time"] >= 0.0
        out = tmp_path / "exp.csv"
        save_experiment_csv(rows, out)
        with open(out) as fh:
            got = list(csv.DictReader(fh))
        assert len(got) == 2
        assert got[0]["Chunk"] == "1"
        assert float(got[0]["F1"]) == rows[0]["F1"]

    def test_missing_class_raises(self):
        with pytest.raises(MissingClassInstance):
            # class present in dtype domain but no rows: simulate via masked call
            stratified_fraction(np.array([], dtype=int), 0.5, seed=0)
