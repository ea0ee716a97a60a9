import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from endotex.errors import ImageTooSmall, InvalidParameters
from endotex.features.edges import (
    edge_histogram,
    phog_descriptor,
    sobel_gradients,
)
from endotex.features.tamura import tamura_features


def brute_sobel(v):
    v = v.astype(np.float64)
    h, w = v.shape
    kx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
    ky = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)
    gx = np.zeros((h - 2, w - 2))
    gy = np.zeros((h - 2, w - 2))
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            patch = v[y - 1 : y + 2, x - 1 : x + 2]
            gx[y - 1, x - 1] = (patch * kx).sum()
            gy[y - 1, x - 1] = (patch * ky).sum()
    return gx, gy


class TestSobel:
    @given(hnp.arrays(np.uint8, (6, 7), elements=st.integers(0, 255)))
    @settings(max_examples=50, deadline=None)
    def test_matches_kernel_convolution(self, v):
        gx, gy = sobel_gradients(v)
        bx, by = brute_sobel(v)
        assert np.allclose(gx, bx) and np.allclose(gy, by)

    def test_horizontal_ramp(self):
        v = np.tile(np.arange(8, dtype=np.uint8) * 10, (8, 1))
        gx, gy = sobel_gradients(v)
        assert np.allclose(gx, 80.0)  # 8 * step of 10
        assert np.allclose(gy, 0.0)

    def test_too_small(self):
        with pytest.raises(ImageTooSmall):
            sobel_gradients(np.zeros((2, 5), dtype=np.uint8))


class TestEdgeHistogram:
    def test_vertical_stripes_bin_at_half_pi(self):
        v = np.zeros((16, 16), dtype=np.uint8)
        v[:, ::4] = 255  # vertical edges -> orientation pi/2
        h = edge_histogram(v, bins=8)
        assert h.argmax() == 4  # bin covering pi/2
        assert h[4] == pytest.approx(1.0)

    def test_horizontal_stripes_bin_at_zero(self):
        v = np.zeros((16, 16), dtype=np.uint8)
        v[::4, :] = 255
        h = edge_histogram(v, bins=8)
        assert h.argmax() == 0
        assert h[0] == pytest.approx(1.0)

    def test_flat_image_uniform_fallback(self):
        h = edge_histogram(np.full((8, 8), 40, dtype=np.uint8), bins=6)
        assert np.allclose(h, 1.0 / 6)

    @given(hnp.arrays(np.uint8, (10, 10), elements=st.integers(0, 255)))
    @settings(max_examples=40, deadline=None)
    def test_normalised(self, v):
        h = edge_histogram(v)
        assert h.shape == (8,)
        assert h.sum() == pytest.approx(1.0)
        assert (h >= 0).all()

    def test_bins_validation(self):
        with pytest.raises(InvalidParameters):
            edge_histogram(np.zeros((8, 8), dtype=np.uint8), bins=1)


class TestPhog:
    def test_shape(self, rng):
        v = rng.integers(0, 255, (32, 32)).astype(np.uint8)
        d = phog_descriptor(v, levels=2, bins=8)
        assert d.shape == ((1 + 4 + 16) * 8,)

    @given(hnp.arrays(np.uint8, (20, 20), elements=st.integers(0, 255)))
    @settings(max_examples=30, deadline=None)
    def test_each_level_sums_to_one(self, v):
        d = phog_descriptor(v, levels=2, bins=8)
        assert d[:8].sum() == pytest.approx(1.0)
        assert d[8:40].sum() == pytest.approx(1.0)
        assert d[40:].sum() == pytest.approx(1.0)

    def test_level_zero_equals_global_weighted_hist(self, rng):
        v = rng.integers(0, 255, (16, 16)).astype(np.uint8)
        d0 = phog_descriptor(v, levels=0, bins=8)
        # level-1 cell histograms must re-aggregate to level 0
        d = phog_descriptor(v, levels=1, bins=8)
        level1 = d[8:].reshape(4, 8).sum(axis=0)
        assert np.allclose(d0, level1 / level1.sum())

    def test_flat_image_uniform_levels(self):
        d = phog_descriptor(np.full((16, 16), 9, dtype=np.uint8), levels=1, bins=4)
        assert np.allclose(d[:4], 0.25)
        assert np.allclose(d[4:], 1.0 / 16)

    def test_too_many_levels(self):
        with pytest.raises(ImageTooSmall):
            phog_descriptor(np.zeros((6, 6), dtype=np.uint8), levels=3)

    def test_validation(self):
        v = np.zeros((16, 16), dtype=np.uint8)
        with pytest.raises(InvalidParameters):
            phog_descriptor(v, levels=-1)
        with pytest.raises(InvalidParameters):
            phog_descriptor(v, bins=1)


class TestTamura:
    def test_output_shape_and_finiteness(self, rng):
        v = rng.integers(0, 255, (32, 32)).astype(np.uint8)
        f = tamura_features(v)
        assert f.shape == (3,)
        assert np.isfinite(f).all()

    def test_constant_image(self):
        f = tamura_features(np.full((16, 16), 100, dtype=np.uint8))
        coarse, contrast, direction = f
        # every window difference is zero, best size stays 1
        assert coarse == pytest.approx(0.5)
        assert contrast == pytest.approx(0.0)
        assert direction == pytest.approx(0.0)

    def test_directionality_of_stripes_near_one(self):
        v = np.zeros((32, 32), dtype=np.uint8)
        v[:, ::4] = 255
        f = tamura_features(v)
        assert f[2] > 0.9

    def test_coarse_texture_scores_lower_than_fine(self):
        fine = np.indices((32, 32)).sum(axis=0) % 2 * 255
        coarse = (np.indices((32, 32)).sum(axis=0) // 8) % 2 * 255
        f_fine = tamura_features(fine.astype(np.uint8))
        f_coarse = tamura_features(coarse.astype(np.uint8))
        assert f_coarse[0] < f_fine[0]

    def test_contrast_is_variance_over_mean_for_single_tile(self):
        v = np.zeros((8, 8), dtype=np.uint8)
        v[:4] = 200
        f = tamura_features(v, window=8)
        tile = v.astype(np.float64)
        assert f[1] == pytest.approx(tile.var() / tile.mean())

    def test_validation(self):
        with pytest.raises(ImageTooSmall):
            tamura_features(np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(InvalidParameters):
            tamura_features(np.zeros((16, 16), dtype=np.uint8), window=1)

    @given(hnp.arrays(np.uint8, (12, 12), elements=st.integers(0, 255)))
    @settings(max_examples=30, deadline=None)
    def test_ranges(self, v):
        coarse, contrast, direction = tamura_features(v)
        assert 0.0 < coarse <= 0.5
        assert contrast >= 0.0
        assert 0.0 <= direction <= 1.0 + 1e-9
