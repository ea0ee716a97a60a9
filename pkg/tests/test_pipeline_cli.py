import json

import numpy as np
import pytest

from endotex.cli import main
from endotex.core import load_dataset
from endotex.errors import ConfigError
from endotex.features import ColumnNormalizer, FeatureSpec
from endotex.models.trees import train_tree
from endotex.pipeline import (
    PipelineBundle,
    PipelineConfig,
    full_pipeline,
    preprocess_dataset,
)

# a deliberately small descriptor set so pipeline tests stay quick
FAST_SPEC = {"lbp_radii": [1], "color_hist": True}


def fast_config(corpus_root, out_dir, **overrides):
    base = dict(
        dataset_root=str(corpus_root),
        output_dir=str(out_dir),
        preprocessing="none",
        augmentation="none",
        feature_spec=dict(FAST_SPEC),
        model="tree",
        model_params={"max_depth": 6},
    )
    base.update(overrides)
    return PipelineConfig.from_dict(base)


class TestPipelineConfig:
    def test_dict_round_trip(self):
        config = fast_config("data", "out", seed=7, n_bags=5)
        again = PipelineConfig.from_dict(config.to_dict())
        assert again == config

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            PipelineConfig.from_dict({"dataset_root": "d", "output_dir": "o",
                                      "feture_preset": "selected"})

    def test_missing_required_field(self):
        with pytest.raises(ConfigError):
            PipelineConfig.from_dict({"output_dir": "o"})

    @pytest.mark.parametrize("bad", [
        {"preprocessing": "blur"},
        {"augmentation": "mixup"},
        {"model": "svm"},
        {"ensemble": "boosting"},
        {"train_fraction": 1.0},
        {"train_fraction": 0.0},
        {"jobs": 0},
        {"schema_version": 99},
    ])
    def test_field_validation(self, bad):
        with pytest.raises(ConfigError):
            PipelineConfig(dataset_root="d", output_dir="o", **bad)

    def test_from_json(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"dataset_root": "d", "output_dir": "o"}))
        assert PipelineConfig.from_json(path).dataset_root == "d"
        path.write_text("{broken")
        with pytest.raises(ConfigError):
            PipelineConfig.from_json(path)
        with pytest.raises(ConfigError):
            PipelineConfig.from_json(tmp_path / "absent.json")

    def test_hash_ignores_location_and_workers(self):
        a = fast_config("data", "out_a", jobs=1)
        b = fast_config("data", "out_b", jobs=4)
        assert a.config_hash() == b.config_hash()
        assert len(a.config_hash()) == 16
        assert int(a.config_hash(), 16) >= 0

    def test_hash_tracks_science_settings(self):
        a = fast_config("data", "out")
        assert a.config_hash() != fast_config("data", "out", seed=1).config_hash()
        assert a.config_hash() != fast_config(
            "data", "out", model_params={"max_depth": 7}
        ).config_hash()

    def test_resolved_spec(self):
        by_preset = PipelineConfig(dataset_root="d", output_dir="o",
                                   feature_preset="realtime")
        assert by_preset.resolved_spec() == FeatureSpec.preset("realtime")
        explicit = fast_config("d", "o")
        assert explicit.resolved_spec() == FeatureSpec.from_dict(FAST_SPEC)


class TestFullPipeline:
    def test_artifacts_and_summary(self, small_corpus, tmp_path):
        out = tmp_path / "run"
        config = fast_config(small_corpus, out)
        summary = full_pipeline(config)
        assert summary["config_hash"] == config.config_hash()
        assert 0.0 <= summary["accuracy"] <= 1.0
        assert 0.0 <= summary["weighted_f1"] <= 1.0
        for name in ("config_resolved.json", "features_train.csv",
                     "features_test.csv", "feature_schema.json", "model.json",
                     "report.json", "report.txt", "run_meta.json"):
            assert (out / name).exists(), name
        meta = json.loads((out / "run_meta.json").read_text())
        assert meta["config_hash"] == config.config_hash()
        assert meta["stages"]["preprocess"] == {"skipped": True}
        resolved = json.loads((out / "config_resolved.json").read_text())
        assert PipelineConfig.from_dict(resolved) == config

    def test_reports_are_byte_identical_across_runs(self, small_corpus, tmp_path):
        outs = []
        for name in ("first", "second"):
            out = tmp_path / name
            full_pipeline(fast_config(small_corpus, out))
            outs.append(out)
        for artifact in ("report.json", "report.txt", "model.json",
                         "features_train.csv", "features_test.csv"):
            assert (outs[0] / artifact).read_bytes() == (outs[1] / artifact).read_bytes(), artifact

    def test_bundle_predicts_new_images(self, small_corpus, tmp_path):
        out = tmp_path / "run"
        full_pipeline(fast_config(small_corpus, out))
        bundle = PipelineBundle.load(out / "model.json")
        dataset = load_dataset(small_corpus)
        from endotex.core import load_image

        name, probs = bundle.predict_image(load_image(dataset.samples[0][0]))
        assert name in dataset.class_names
        assert probs.sum() == pytest.approx(1.0)

    def test_selection_and_threshold_stages(self, small_corpus, tmp_path):
        out = tmp_path / "run"
        config = fast_config(
            small_corpus, out,
            select_features=True,
            subset_params={"population": 4, "generations": 2},
            optimize_thresholds=True,
            threshold_params={"population": 4, "iterations": 3},
        )
        full_pipeline(config)
        assert (out / "thresholds.json").exists()
        bundle = PipelineBundle.load(out / "model.json")
        assert bundle.feature_mask is not None and bundle.feature_mask.any()
        assert bundle.thresholds is not None
        meta = json.loads((out / "run_meta.json").read_text())
        assert meta["selected_features"] == int(bundle.feature_mask.sum())
        report = json.loads((out / "report.json").read_text())
        search = report["extras"]["threshold_search"]
        assert (search["validation_weighted_f1_thresholded"]
                >= search["validation_weighted_f1_argmax"] - 1e-12)

    def test_preprocess_and_balance_stages(self, small_corpus, tmp_path):
        out = tmp_path / "run"
        config = fast_config(small_corpus, out, preprocessing="inpaint",
                             augmentation="balance")
        summary = full_pipeline(config)
        assert (out / "preprocessed" / "train").is_dir()
        assert (out / "preprocessed" / "test").is_dir()
        assert (out / "augmented").is_dir()
        assert 0.0 <= summary["accuracy"] <= 1.0

    def test_resample_and_bagging_paths(self, small_corpus, tmp_path):
        out = tmp_path / "run"
        config = fast_config(small_corpus, out, augmentation="resample",
                             ensemble="bagging", n_bags=3)
        summary = full_pipeline(config)
        bundle = PipelineBundle.load(out / "model.json")
        assert len(bundle.model.members) == 3
        assert 0.0 <= summary["accuracy"] <= 1.0


class TestPreprocessDataset:
    def test_writes_cleaned_copies(self, small_corpus, tmp_path):
        ds = load_dataset(small_corpus)
        subset = type(ds)(ds.root, list(ds.class_names), ds.samples[:4])
        out = preprocess_dataset(subset, tmp_path / "clean", "inpaint",
                                 save_masks=True)
        assert len(out.samples) == 4
        for path, _ in out.samples:
            assert path.exists()
        assert (tmp_path / "clean" / "masks").is_dir()
        assert out.samples == sorted(out.samples, key=lambda s: (s[1], s[0]))


class TestBundle:
    def _bundle(self):
        rng = np.random.default_rng(0)
        X = rng.random((40, 6))
        y = (X[:, 0] > 0.5).astype(int)
        normalizer = ColumnNormalizer.fit(X)
        mask = np.array([True, False, True, True, False, True])
        model = train_tree(normalizer.transform(X)[:, mask], y, seed=1)
        return PipelineBundle(
            model=model,
            spec=FeatureSpec.from_dict(FAST_SPEC),
            normalizer=normalizer,
            class_names=["healthy", "lesion"],
            config_hash="abcd1234abcd1234",
            feature_mask=mask,
            thresholds=np.array([0.0, 0.3]),
        ), X

    def test_save_load_round_trip(self, tmp_path):
        bundle, X = self._bundle()
        path = tmp_path / "bundle.json"
        bundle.save(path)
        loaded = PipelineBundle.load(path)
        assert loaded.class_names == bundle.class_names
        assert loaded.config_hash == bundle.config_hash
        assert loaded.spec == bundle.spec
        assert np.array_equal(loaded.feature_mask, bundle.feature_mask)
        assert np.array_equal(loaded.thresholds, bundle.thresholds)
        assert loaded.dlbp_patterns is None
        assert np.array_equal(loaded.score_features(X), bundle.score_features(X))

    def test_score_features_normalizes_then_masks(self):
        bundle, X = self._bundle()
        expect = bundle.model.predict_proba(
            bundle.normalizer.transform(X)[:, bundle.feature_mask]
        )
        assert np.array_equal(bundle.score_features(X), expect)
        single = bundle.score_features(X[0])
        assert single.shape == (1, 2)

    def test_unknown_format_version(self, tmp_path):
        bundle, _ = self._bundle()
        path = tmp_path / "bundle.json"
        bundle.save(path)
        doc = json.loads(path.read_text())
        doc["format_version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(ConfigError):
            PipelineBundle.load(path)


@pytest.fixture(scope="module")
def cli_artifacts(small_corpus, tmp_path_factory):
    """Features, schema, and a trained bundle produced through the CLI."""
    root = tmp_path_factory.mktemp("cli")
    spec_path = root / "spec.json"
    spec_path.write_text(json.dumps(FAST_SPEC))
    features = root / "features.csv"
    schema = root / "schema.json"
    model = root / "model.json"
    assert main(["extract", "--input", str(small_corpus),
                 "--output", str(features), "--spec", str(spec_path),
                 "--schema", str(schema)]) == 0
    assert main(["train", "--features", str(features), "--output", str(model),
                 "--model", "tree", "--schema", str(schema)]) == 0
    return {"root": root, "features": features, "schema": schema,
            "model": model, "spec": spec_path}


class TestCli:
    def test_missing_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2
        capsys.readouterr()

    def test_config_errors_exit_3(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"dataset_root": "d", "output_dir": "o",
                                   "modle": "tree"}))
        assert main(["run", "--config", str(bad)]) == 3
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "ConfigError"
        assert "modle" in err["message"]

    def test_data_errors_exit_4(self, tmp_path, capsys):
        missing = tmp_path / "nowhere"
        rc = main(["extract", "--input", str(missing),
                   "--output", str(tmp_path / "f.csv"), "--preset", "realtime"])
        assert rc == 4
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "UnreadableFile"

    def test_run_with_output_override(self, small_corpus, tmp_path, capsys):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(
            fast_config(small_corpus, tmp_path / "ignored").to_dict()
        ))
        override = tmp_path / "actual"
        assert main(["run", "--config", str(config_path),
                     "--output", str(override)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["output_dir"] == str(override)
        assert (override / "report.json").exists()
        assert not (tmp_path / "ignored").exists()

    def test_predict_reports_scores(self, cli_artifacts, small_corpus, capsys):
        ds = load_dataset(small_corpus)
        images = [str(ds.samples[0][0]), str(ds.samples[-1][0])]
        assert main(["predict", "--model", str(cli_artifacts["model"])] + images) == 0
        results = json.loads(capsys.readouterr().out)
        assert len(results) == 2
        for row in results:
            assert row["prediction"] in ds.class_names
            assert set(row["scores"]) == set(ds.class_names)
            assert sum(row["scores"].values()) == pytest.approx(1.0, abs=1e-4)

    def test_evaluate_writes_report(self, cli_artifacts, capsys):
        report = cli_artifacts["root"] / "report.json"
        text = cli_artifacts["root"] / "report.txt"
        assert main(["evaluate", "--model", str(cli_artifacts["model"]),
                     "--features", str(cli_artifacts["features"]),
                     "--report", str(report), "--text", str(text)]) == 0
        doc = json.loads(report.read_text())
        assert doc["accuracy"] == 1.0  # scored on its own training rows
        assert "class" in text.read_text()
        capsys.readouterr()

    def test_thresholds_then_predict_with_them(self, cli_artifacts, small_corpus, capsys):
        t_path = cli_artifacts["root"] / "thresholds.json"
        assert main(["thresholds", "--model", str(cli_artifacts["model"]),
                     "--features", str(cli_artifacts["features"]),
                     "--output", str(t_path), "--population", "4",
                     "--iterations", "3"]) == 0
        doc = json.loads(t_path.read_text())
        ds = load_dataset(small_corpus)
        assert set(doc) == set(ds.class_names)
        capsys.readouterr()
        assert main(["predict", "--model", str(cli_artifacts["model"]),
                     "--thresholds", str(t_path), str(ds.samples[0][0])]) == 0
        results = json.loads(capsys.readouterr().out)
        assert results[0]["prediction"] in ds.class_names

    def test_select_features_cli(self, cli_artifacts, capsys):
        out = cli_artifacts["root"] / "subset.json"
        assert main(["select-features", "--features", str(cli_artifacts["features"]),
                     "--output", str(out), "--model", "tree",
                     "--population", "4", "--generations", "2"]) == 0
        doc = json.loads(out.read_text())
        assert doc["n_selected"] == sum(doc["mask"])
        assert len(doc["columns"]) == doc["n_selected"]
        capsys.readouterr()

    def test_bench_cli(self, cli_artifacts, small_corpus, capsys):
        assert main(["bench", "--model", str(cli_artifacts["model"]),
                     "--input", str(small_corpus), "--limit", "6",
                     "--warmup", "1", "--single-thread"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["fps"] > 0 and doc["n_items"] == 6 and doc["workers"] == 1

    def test_preprocess_and_augment_cli(self, small_corpus, tmp_path, capsys):
        clean = tmp_path / "clean"
        assert main(["preprocess", "--input", str(small_corpus),
                     "--output", str(clean), "--mode", "none"]) == 0
        assert load_dataset(clean).class_names == load_dataset(small_corpus).class_names
        grown = tmp_path / "grown"
        assert main(["augment", "--input", str(clean), "--output", str(grown),
                     "--seed", "3"]) == 0
        assert len(load_dataset(grown).samples) >= len(load_dataset(clean).samples)
        capsys.readouterr()

    def test_fraction_experiment_cli(self, cli_artifacts, capsys):
        out = cli_artifacts["root"] / "fractions.csv"
        assert main(["fraction-experiment",
                     "--features", str(cli_artifacts["features"]),
                     "--test", str(cli_artifacts["features"]),
                     "--output", str(out), "--fractions", "0.5", "1.0"]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("Chunk,")
        assert len(lines) == 3  # header + one row per fraction
        capsys.readouterr()
