import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from endotex.core import Image, load_dataset
from endotex.errors import (
    DimensionDrift,
    MissingSample,
    NotFitted,
    SchemaMismatch,
    UnreadableFile,
)
from endotex.features.extraction import (
    ColumnNormalizer,
    FeatureExtractor,
    FeatureSpec,
    load_external_features,
    save_schema,
    spec_blocks,
)


class TestFeatureSpec:
    def test_presets_exist_and_roundtrip(self):
        for name in FeatureSpec.PRESETS:
            spec = FeatureSpec.preset(name)
            again = FeatureSpec.from_dict(spec.to_dict())
            assert again == spec

    def test_unknown_preset(self):
        with pytest.raises(Exception):
            FeatureSpec.preset("imaginary")

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(SchemaMismatch):
            FeatureSpec.from_dict({"lbp_radii": [1], "nope": True})

    def test_dimension_is_pure_function_of_spec(self):
        # realtime has no corpus-fitted block, so its width is static
        spec = FeatureSpec.preset("realtime")
        ex1 = FeatureExtractor(spec)
        ex2 = FeatureExtractor(spec)
        assert ex1.dimension == ex2.dimension
        assert ex1.column_names == ex2.column_names

    def test_column_names_unique(self):
        for name in ("selected", "realtime"):
            ex = FeatureExtractor(FeatureSpec.preset(name))
            assert len(set(ex.column_names)) == ex.dimension


class TestBlockLayout:
    def test_widths_add_up(self, rng):
        spec = FeatureSpec.preset("realtime")
        blocks = spec_blocks(spec)
        ex = FeatureExtractor(spec)
        assert sum(b.size for b in blocks) == ex.dimension
        img = Image(rng.integers(0, 255, (32, 32, 3)).astype(np.uint8))
        vec = ex.extract(img)
        assert vec.shape == (ex.dimension,)

    def test_vector_matches_block_concatenation(self, rng):
        from endotex.features.color import color_histogram
        from endotex.features.local_patterns import lbp_histogram

        spec = FeatureSpec(
            lbp_radii=(1,),
            color_hist=True,
            hist_space="rgb",
            hist_bins=8,
        )
        arr = rng.integers(0, 255, (16, 16, 3)).astype(np.uint8)
        img = Image(arr)
        ex = FeatureExtractor(spec)
        vec = ex.extract(img)
        assert vec.shape == (256 + 24,)
        from endotex.core import to_gray

        assert np.allclose(vec[:256], lbp_histogram(to_gray(img), 1))
        assert np.allclose(vec[256:], color_histogram(img, "rgb", 8))

    def test_histogram_blocks_sum_to_one(self, rng):
        spec = FeatureSpec.preset("realtime")
        ex = FeatureExtractor(spec)
        img = Image(rng.integers(0, 255, (32, 32, 3)).astype(np.uint8))
        vec = ex.extract(img)
        pos = 0
        for b in ex.blocks:
            chunk = vec[pos : pos + b.size]
            if b.distribution:
                assert chunk.sum() == pytest.approx(1.0), b.name
            pos += b.size


class TestExtractDataset:
    def test_parallel_equals_serial(self, small_corpus):
        ds = load_dataset(small_corpus)
        ds = type(ds)(ds.root, ds.class_names, ds.samples[:12])
        ex = FeatureExtractor(FeatureSpec(lbp_radii=(1, 2), color_hist=True))
        serial = ex.extract_dataset(ds, jobs=1)
        parallel = ex.extract_dataset(ds, jobs=2)
        assert np.array_equal(serial.values, parallel.values)
        assert serial.sample_ids == parallel.sample_ids
        assert np.array_equal(serial.labels, parallel.labels)

    def test_row_order_is_sample_order(self, small_corpus):
        ds = load_dataset(small_corpus)
        ex = FeatureExtractor(FeatureSpec(lbp_radii=(1,)))
        sub = type(ds)(ds.root, ds.class_names, ds.samples[:5])
        fm = ex.extract_dataset(sub)
        for i, (p, c) in enumerate(sub.samples):
            assert fm.sample_ids[i] == str(p.relative_to(ds.root))
            assert fm.labels[i] == c

    def test_dlbp_requires_fit(self, rng):
        ex = FeatureExtractor(FeatureSpec(lbp_radii=(), dlbp=True))
        with pytest.raises(NotFitted):
            ex.extract(Image(rng.integers(0, 255, (16, 16, 3)).astype(np.uint8)))
        # the layout function itself stays strict
        with pytest.raises(NotFitted):
            spec_blocks(FeatureSpec(dlbp=True))

    def test_dlbp_fit_then_extract(self, small_corpus):
        ds = load_dataset(small_corpus)
        sub = type(ds)(ds.root, ds.class_names, ds.samples[:8])
        ex = FeatureExtractor(FeatureSpec(lbp_radii=(), dlbp=True, dlbp_coverage=0.8))
        ex.fit_dlbp(sub)
        fm = ex.extract_dataset(sub)
        assert fm.values.shape == (8, ex.dimension)
        assert ex.dimension == ex.dlbp_patterns.patterns.size


class TestExternal:
    def test_round_trip(self, tmp_path):
        p = tmp_path / "deep.csv"
        p.write_text("id,f0,f1\na.png,0.5,1.5\nb.png,2.0,3.0\n")
        table = load_external_features(p)
        assert set(table) == {"a.png", "b.png"}
        assert np.allclose(table["a.png"], [0.5, 1.5])

    def test_no_header_needed(self, tmp_path):
        p = tmp_path / "deep.csv"
        p.write_text("a.png,1,2\nb.png,3,4\n")
        assert len(load_external_features(p)) == 2

    def test_dimension_drift(self, tmp_path):
        p = tmp_path / "deep.csv"
        p.write_text("a.png,1,2\nb.png,3\n")
        with pytest.raises(DimensionDrift):
            load_external_features(p)

    def test_non_numeric_mid_file(self, tmp_path):
        p = tmp_path / "deep.csv"
        p.write_text("a.png,1,2\nb.png,x,4\n")
        with pytest.raises(SchemaMismatch):
            load_external_features(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(UnreadableFile):
            load_external_features(tmp_path / "gone.csv")

    def test_extract_with_external_block(self, rng, tmp_path):
        p = tmp_path / "deep.csv"
        p.write_text("x.png,0.1,0.2,0.3\n")
        ex = FeatureExtractor(FeatureSpec(lbp_radii=(1,), external=str(p)))
        img = Image(rng.integers(0, 255, (8, 8, 3)).astype(np.uint8))
        vec = ex.extract(img, sample_id="x.png")
        assert vec.shape == (256 + 3,)
        assert np.allclose(vec[-3:], [0.1, 0.2, 0.3])
        with pytest.raises(MissingSample):
            ex.extract(img, sample_id="y.png")
        with pytest.raises(MissingSample):
            ex.extract(img)

    def test_external_path_must_exist(self, tmp_path):
        missing = str(tmp_path / "absent.csv")
        with pytest.raises(UnreadableFile):
            FeatureExtractor(FeatureSpec(lbp_radii=(1,), external=missing))
        # layout without a loaded table is an error, not a silent zero block
        with pytest.raises(NotFitted):
            spec_blocks(FeatureSpec(external=missing))


class TestNormalizer:
    @given(
        hnp.arrays(
            np.float64,
            (6, 4),
            elements=st.floats(-100, 100, allow_nan=False),
        )
    )
    @settings(max_examples=50, deadline=None)
    def test_training_data_maps_into_unit_interval(self, values):
        norm = ColumnNormalizer.fit(values)
        out = norm.transform(values)
        assert out.min() >= 0.0 and out.max() <= 1.0
        # non-constant columns span the full range
        span = values.max(axis=0) - values.min(axis=0)
        for c in range(4):
            if span[c] > 0:
                assert out[:, c].min() == pytest.approx(0.0)
                assert out[:, c].max() == pytest.approx(1.0)
            else:
                assert (out[:, c] == 0.0).all()

    def test_unseen_values_clamped(self):
        norm = ColumnNormalizer.fit(np.array([[0.0], [10.0]]))
        out = norm.transform(np.array([[-5.0], [15.0], [5.0]]))
        assert out.ravel().tolist() == [0.0, 1.0, 0.5]

    def test_dimension_drift(self):
        norm = ColumnNormalizer.fit(np.zeros((3, 4)))
        with pytest.raises(DimensionDrift):
            norm.transform(np.zeros((2, 5)))

    def test_round_trip(self, rng):
        values = rng.random((5, 3)) * 7
        norm = ColumnNormalizer.fit(values)
        again = ColumnNormalizer.from_dict(norm.to_dict())
        probe = rng.random((4, 3)) * 10 - 2
        assert np.array_equal(norm.transform(probe), again.transform(probe))


class TestSchema:
    def test_save_schema_contents(self, tmp_path, rng):
        ex = FeatureExtractor(FeatureSpec(lbp_radii=(1,), tamura=True))
        out = tmp_path / "schema.json"
        save_schema(ex, out, class_names=["a", "b"])
        doc = json.loads(out.read_text())
        assert doc["class_names"] == ["a", "b"]
        assert doc["columns"] == ex.column_names
        assert sum(b["size"] for b in doc["blocks"]) == ex.dimension
        spec_again = FeatureSpec.from_dict(doc["spec"])
        assert spec_again == ex.spec
