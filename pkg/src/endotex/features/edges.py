"""Gradient-based descriptors: orientation histogram and its spatial pyramid.

Gradients come from the 3x3 Sobel operator evaluated on the interior (the
one-pixel border has no full neighbourhood).  Orientations are folded into
[0, pi): a horizontal edge (gradient pointing vertically) lands at 0, a
vertical edge at pi/2.
"""

from __future__ import annotations

import numpy as np

from ..core import GrayImage, gray_array
from ..errors import ImageTooSmall, InvalidParameters


def sobel_gradients(gray: GrayImage) -> tuple[np.ndarray, np.ndarray]:
    """(gx, gy) on the interior, each shaped (h-2, w-2); y grows downward."""
    v = gray_array(gray).astype(np.float64)
    h, w = v.shape
    if h < 3 or w < 3:
        raise ImageTooSmall(f"{w}x{h} too small for a 3x3 operator")
    gx = (
        (v[:-2, 2:] + 2.0 * v[1:-1, 2:] + v[2:, 2:])
        - (v[:-2, :-2] + 2.0 * v[1:-1, :-2] + v[2:, :-2])
    )
    gy = (
        (v[2:, :-2] + 2.0 * v[2:, 1:-1] + v[2:, 2:])
        - (v[:-2, :-2] + 2.0 * v[:-2, 1:-1] + v[:-2, 2:])
    )
    return gx, gy


def _edge_orientations(gray: GrayImage) -> tuple[np.ndarray, np.ndarray]:
    """Edge-direction angles in [0, pi) and gradient magnitudes."""
    gx, gy = sobel_gradients(gray)
    mag = np.hypot(gx, gy)
    theta = np.mod(np.arctan2(gy, gx) + np.pi / 2.0, np.pi)
    return theta, mag


def edge_histogram(gray: GrayImage, bins: int = 8) -> np.ndarray:
    """Normalised histogram of edge directions over edge pixels.

    Edge pixels are those whose gradient magnitude exceeds the image mean
    magnitude; an image with no edge pixels returns the uniform histogram by
    convention.
    """
    if bins < 2:
        raise InvalidParameters(f"bins must be >= 2, got {bins}")
    theta, mag = _edge_orientations(gray)
    edge = mag > mag.mean()
    if not edge.any():
        return np.full(bins, 1.0 / bins)
    idx = np.minimum((theta[edge] / np.pi * bins).astype(np.int64), bins - 1)
    return np.bincount(idx, minlength=bins) / idx.size


def phog_descriptor(gray: GrayImage, levels: int = 2, bins: int = 8) -> np.ndarray:
    """Pyramid of magnitude-weighted orientation histograms.

    Level l splits the gradient field into 2^l x 2^l cells; each level's
    concatenated cell histograms are L1-normalised together, so every level
    block sums to 1 (uniform by convention when the level has no gradient
    mass).
    """
    if levels < 0:
        raise InvalidParameters(f"levels must be >= 0, got {levels}")
    if bins < 2:
        raise InvalidParameters(f"bins must be >= 2, got {bins}")
    theta, mag = _edge_orientations(gray)
    h, w = mag.shape
    idx = np.minimum((theta / np.pi * bins).astype(np.int64), bins - 1)
    out = []
    for level in range(levels + 1):
        cells = 2**level
        if cells > h or cells > w:
            raise ImageTooSmall(
                f"level {level} needs {cells} cells per axis on a {w}x{h} field"
            )
        ys = np.linspace(0, h, cells + 1, dtype=np.int64)
        xs = np.linspace(0, w, cells + 1, dtype=np.int64)
        block = np.zeros(cells * cells * bins)
        pos = 0
        for i in range(cells):
            for j in range(cells):
                ci = idx[ys[i] : ys[i + 1], xs[j] : xs[j + 1]].ravel()
                cm = mag[ys[i] : ys[i + 1], xs[j] : xs[j + 1]].ravel()
                block[pos : pos + bins] = np.bincount(ci, weights=cm, minlength=bins)
                pos += bins
        total = block.sum()
        out.append(block / total if total > 0 else np.full(block.size, 1.0 / block.size))
    return np.concatenate(out)
