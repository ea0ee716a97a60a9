"""Compact composite descriptors joining colour and texture statistics.

The colour-and-edge descriptor concatenates the three channel histograms with
the edge-direction histogram (all 8-bin by default).  The fuzzy
colour-and-texture histogram scores each grid cell with triangular fuzzy
memberships over an intensity quantiser and a texture quantiser and
accumulates membership products weighted by the cell's snapped intensity.
The joint descriptor is simply the concatenation of the two.
"""

from __future__ import annotations

import numpy as np

from ..core import Image, rgb_array, to_gray
from ..errors import GridLargerThanImage, InvalidParameters
from .edges import edge_histogram


def cedd_descriptor(img: Image, bins: int = 8) -> np.ndarray:
    """[R-hist, G-hist, B-hist, edge-hist], each block normalised to 1."""
    if bins < 2:
        raise InvalidParameters(f"bins must be >= 2, got {bins}")
    data = rgb_array(img)
    n = data.shape[0] * data.shape[1]
    blocks = [
        np.bincount(
            (data[..., c].astype(np.int64) * bins // 256).ravel(), minlength=bins
        ) / n
        for c in range(3)
    ]
    blocks.append(edge_histogram(to_gray(data), bins))
    return np.concatenate(blocks)


def _triangular_memberships(x: float, bins: int) -> np.ndarray:
    """Triangular fuzzy memberships over ``bins`` centres spanning [0, 256).

    ``x`` is clamped to the centre range so the memberships always sum to 1;
    at most two adjacent bins are non-zero.
    """
    width = 256.0 / bins
    centres = (np.arange(bins) + 0.5) * width
    x = float(np.clip(x, centres[0], centres[-1]))
    mu = np.maximum(0.0, 1.0 - np.abs(x - centres) / width)
    return mu


def fcth_descriptor(
    img: Image, grid: tuple[int, int] = (4, 4), bins: int = 8
) -> np.ndarray:
    """Fuzzy colour/texture histogram over a cell grid.

    Per cell: colour value = mean intensity, texture value = twice the
    intensity standard deviation (both on the 0..255 scale).  Cell (a, b)
    accumulates mu_colour[a] * mu_texture[b] * delta, where delta is the
    cell's intensity snapped to its nearest quantiser centre, scaled to
    [0, 1].  The (bins x bins) table is flattened colour-major and
    L1-normalised.
    """
    rows, cols = grid
    data = rgb_array(img)
    h, w = data.shape[:2]
    if rows < 1 or cols < 1:
        raise InvalidParameters(f"grid {grid} must be positive")
    if rows > h or cols > w:
        raise GridLargerThanImage(f"grid {grid} exceeds image {w}x{h}")
    gray = to_gray(data).data.astype(np.float64)
    width = 256.0 / bins
    centres = (np.arange(bins) + 0.5) * width
    ys = np.linspace(0, h, rows + 1, dtype=np.int64)
    xs = np.linspace(0, w, cols + 1, dtype=np.int64)
    table = np.zeros((bins, bins))
    for i in range(rows):
        for j in range(cols):
            cell = gray[ys[i] : ys[i + 1], xs[j] : xs[j + 1]]
            colour = float(cell.mean())
            texture = 2.0 * float(cell.std())
            mu_c = _triangular_memberships(colour, bins)
            mu_t = _triangular_memberships(texture, bins)
            delta = centres[int(np.argmin(np.abs(centres - colour)))] / 255.0
            table += np.outer(mu_c, mu_t) * delta
    flat = table.ravel()
    return flat / flat.sum()


def jcd_descriptor(img: Image, bins: int = 8, grid: tuple[int, int] = (4, 4)) -> np.ndarray:
    """Concatenation of the colour-edge and fuzzy colour-texture descriptors."""
    return np.concatenate([cedd_descriptor(img, bins), fcth_descriptor(img, grid, bins)])
