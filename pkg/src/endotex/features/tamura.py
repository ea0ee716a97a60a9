"""Perceptual texture statistics: coarseness, contrast, directionality.

Coarseness finds, per pixel, the window size (powers of two from 1 to 32,
capped by the image) whose non-overlapping mean difference is largest, and
reports the inverse of the average best size so the value shrinks for coarse
textures and stays in (0, 1].  Contrast is the variance-to-mean ratio averaged
over local tiles.  Directionality is the resultant length of the doubled
gradient-orientation distribution: 1 for a single dominant orientation, 0 for
an isotropic field.
"""

from __future__ import annotations

import numpy as np

from ..core import GrayImage, gray_array
from ..errors import ImageTooSmall, InvalidParameters
from .edges import sobel_gradients

TAMURA_NAMES = ("coarseness", "contrast", "directionality")
_MAX_WINDOW = 32


def tamura_features(gray: GrayImage, window: int = 16) -> np.ndarray:
    """[coarseness, contrast, directionality] for an image of at least 8x8."""
    v = gray_array(gray).astype(np.float64)
    h, w = v.shape
    if h < 8 or w < 8:
        raise ImageTooSmall(f"{w}x{h} below the 8x8 minimum")
    if window < 2:
        raise InvalidParameters(f"contrast window must be >= 2, got {window}")
    return np.array([
        _coarseness(v),
        _contrast(v, window),
        _directionality(gray),
    ])


def _coarseness(v: np.ndarray) -> float:
    h, w = v.shape
    integral = np.zeros((h + 1, w + 1))
    integral[1:, 1:] = v.cumsum(0).cumsum(1)

    def window_mean(size):
        # mean over [y, y+size) x [x, x+size), anchored top-left
        s = integral
        return (
            s[size:, size:] - s[:-size, size:] - s[size:, :-size] + s[:-size, :-size]
        ) / float(size * size)

    best_energy = np.full((h, w), -1.0)
    best_size = np.ones((h, w))
    size = 1
    while size <= _MAX_WINDOW and 2 * size <= min(h, w):
        means = window_mean(size)  # (h-size+1, w-size+1)
        mh, mw = means.shape
        # adjacent non-overlapping windows: horizontal and vertical pairs
        eh = np.abs(means[:, size:] - means[:, :-size]) if mw > size else None
        ev = np.abs(means[size:, :] - means[:-size, :]) if mh > size else None
        energy = np.full((h, w), -np.inf)
        if eh is not None:
            pane = np.full((h, w), -np.inf)
            pane[:mh, : mw - size] = eh
            energy = np.maximum(energy, pane)
        if ev is not None:
            pane = np.full((h, w), -np.inf)
            pane[: mh - size, :mw] = ev
            energy = np.maximum(energy, pane)
        better = energy > best_energy
        best_size[better] = size
        best_energy[better] = energy[better]
        size *= 2
    valid = best_energy > -1.0
    mean_size = float(best_size[valid].mean()) if valid.any() else 1.0
    return 1.0 / (1.0 + mean_size)


def _contrast(v: np.ndarray, window: int) -> float:
    h, w = v.shape
    ratios = []
    for top in range(0, h, window):
        for left in range(0, w, window):
            tile = v[top : top + window, left : left + window]
            mu = tile.mean()
            ratios.append(tile.var() / mu if mu > 0 else 0.0)
    return float(np.mean(ratios))


def _directionality(gray: GrayImage, bins: int = 16) -> float:
    gx, gy = sobel_gradients(gray)
    mag = np.hypot(gx, gy)
    threshold = mag.mean()
    edge = mag > threshold
    if not edge.any():
        return 0.0
    theta = np.mod(np.arctan2(gy[edge], gx[edge]), np.pi)
    idx = np.minimum((theta / np.pi * bins).astype(np.int64), bins - 1)
    hist = np.bincount(idx, minlength=bins) / idx.size
    centres = (np.arange(bins) + 0.5) * np.pi / bins
    resultant = np.abs(np.sum(hist * np.exp(2j * centres)))
    return float(resultant)
