"""Colour descriptors: spatial layout, channel histograms, correlogram.

Colour quantisation used by the layout and correlogram takes the top m bits of
each channel (total colours must be 8, 64, or 512).
"""

from __future__ import annotations

import numpy as np

from ..core import Image, rgb_array
from ..errors import GridLargerThanImage, InvalidParameters

_CUBE_BITS = {8: 1, 64: 2, 512: 3}


def _quantize_colors(rgb: np.ndarray, colors: int) -> np.ndarray:
    if colors not in _CUBE_BITS:
        raise InvalidParameters(
            f"colour count must be one of {sorted(_CUBE_BITS)}, got {colors}"
        )
    bits = _CUBE_BITS[colors]
    shift = 8 - bits
    r = rgb[..., 0] >> shift
    g = rgb[..., 1] >> shift
    b = rgb[..., 2] >> shift
    return (
        (r.astype(np.int64) << (2 * bits)) | (g.astype(np.int64) << bits) | b
    )


def color_layout(
    img: Image, grid: tuple[int, int] = (4, 4), bins: int = 8
) -> np.ndarray:
    """Per-cell quantised colour histograms over a rows x cols grid.

    Cells are traversed row-major; each cell's histogram is normalised over
    its own pixel count, so every cell block sums to 1.
    """
    rows, cols = grid
    data = rgb_array(img)
    h, w = data.shape[:2]
    if rows < 1 or cols < 1:
        raise InvalidParameters(f"grid {grid} must be positive")
    if rows > h or cols > w:
        raise GridLargerThanImage(f"grid {grid} exceeds image {w}x{h}")
    q = _quantize_colors(data, bins)
    ys = np.linspace(0, h, rows + 1, dtype=np.int64)
    xs = np.linspace(0, w, cols + 1, dtype=np.int64)
    out = np.empty(rows * cols * bins)
    pos = 0
    for i in range(rows):
        for j in range(cols):
            cell = q[ys[i] : ys[i + 1], xs[j] : xs[j + 1]].ravel()
            out[pos : pos + bins] = np.bincount(cell, minlength=bins) / cell.size
            pos += bins
    return out


def _rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Vectorised RGB [0,255] -> HSV in [0,1] per channel."""
    arr = rgb.astype(np.float64) / 255.0
    r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
    maxc = arr.max(axis=-1)
    minc = arr.min(axis=-1)
    v = maxc
    span = maxc - minc
    s = np.where(maxc > 0, span / np.where(maxc > 0, maxc, 1.0), 0.0)
    safe = np.where(span > 0, span, 1.0)
    rc = (maxc - r) / safe
    gc = (maxc - g) / safe
    bc = (maxc - b) / safe
    h = np.where(maxc == r, bc - gc, np.where(maxc == g, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(span > 0, (h / 6.0) % 1.0, 0.0)
    return np.stack([h, s, v], axis=-1)


def color_histogram(img: Image, space: str = "rgb", bins: int = 8) -> np.ndarray:
    """Per-channel histograms (each block sums to 1), concatenated."""
    if bins < 2:
        raise InvalidParameters(f"bins must be >= 2, got {bins}")
    data = rgb_array(img)
    if space == "rgb":
        channels = [data[..., c].astype(np.int64) * bins // 256 for c in range(3)]
    elif space == "hsv":
        hsv = _rgb_to_hsv(data)
        channels = [
            np.minimum((hsv[..., c] * bins).astype(np.int64), bins - 1)
            for c in range(3)
        ]
    else:
        raise InvalidParameters(f"unknown colour space {space!r}")
    n = data.shape[0] * data.shape[1]
    return np.concatenate(
        [np.bincount(c.ravel(), minlength=bins) / n for c in channels]
    )


def _ring_offsets(k: int) -> list[tuple[int, int]]:
    """All (dy, dx) with Chebyshev norm exactly k."""
    offs = [(-k, dx) for dx in range(-k, k + 1)]
    offs += [(k, dx) for dx in range(-k, k + 1)]
    offs += [(dy, -k) for dy in range(-k + 1, k)]
    offs += [(dy, k) for dy in range(-k + 1, k)]
    return offs


def color_correlogram(
    img: Image, distances: tuple[int, ...] = (1, 2, 3, 4), colors: int = 64
) -> np.ndarray:
    """Auto-correlogram: for each distance k and colour c, the probability
    that a neighbour at Chebyshev distance exactly k of a colour-c pixel is
    also colour c.

    Neighbours outside the frame are simply absent; colours with no pixels (or
    no in-frame neighbours) report 0.  Output is distance-major:
    [d0c0 .. d0cN, d1c0 ..].
    """
    q = _quantize_colors(rgb_array(img), colors)
    h, w = q.shape
    full_hist = np.bincount(q.ravel(), minlength=colors)
    out = np.zeros((len(distances), colors))
    for di, k in enumerate(distances):
        if k < 1:
            raise InvalidParameters(f"distance {k} must be >= 1")
        num = np.zeros(colors, dtype=np.int64)
        den = np.zeros(colors, dtype=np.int64)
        for dy, dx in _ring_offsets(k):
            y0, y1 = max(0, -dy), h - max(0, dy)
            x0, x1 = max(0, -dx), w - max(0, dx)
            if y0 >= y1 or x0 >= x1:
                continue
            # denominator = histogram of the valid source rectangle; cheaper
            # as the full histogram minus the excluded boundary strips
            den += full_hist
            if dy:
                rows = q[h - dy :, :] if dy > 0 else q[:-dy, :]
                den -= np.bincount(rows.ravel(), minlength=colors)
            if dx:
                cols = q[y0:y1, w - dx :] if dx > 0 else q[y0:y1, :-dx]
                den -= np.bincount(cols.ravel(), minlength=colors)
            # matches at offset o equal matches at -o (same unordered pairs),
            # so count half the ring and double
            if dy > 0 or (dy == 0 and dx > 0):
                a = q[y0:y1, x0:x1]
                b = q[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
                af = a.ravel()
                num += 2 * np.bincount(af[(a == b).ravel()], minlength=colors)
        nz = den > 0
        out[di, nz] = num[nz] / den[nz]
    return out.ravel()
