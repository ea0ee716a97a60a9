"""Grey-level co-occurrence matrices and the classic 13 texture statistics.

Pixels are quantised to a small number of grey levels (floor(v * levels /
256)); pairs at a fixed displacement are counted symmetrically (both orders)
for four directions: horizontal, vertical, and the two diagonals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import GrayImage, gray_array
from ..errors import ImageTooSmall, InvalidParameters, NotNormalized

DIRECTIONS = ("horizontal", "vertical", "diag_down", "diag_up")
_DISPLACEMENTS = {
    "horizontal": (0, 1),
    "vertical": (1, 0),
    "diag_down": (1, 1),
    "diag_up": (-1, 1),
}

HARALICK_NAMES = (
    "asm",
    "contrast",
    "correlation",
    "variance",
    "idm",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "entropy",
    "difference_variance",
    "difference_entropy",
    "imc1",
    "imc2",
)


@dataclass
class Glcm:
    """Symmetric co-occurrence counts, one (levels x levels) matrix per
    direction in :data:`DIRECTIONS` order."""

    counts: np.ndarray
    levels: int
    distance: int

    def normalized(self) -> np.ndarray:
        """Counts converted to per-direction probability matrices."""
        c = self.counts.astype(np.float64)
        totals = c.sum(axis=(1, 2), keepdims=True)
        return c / totals


def quantize(gray: GrayImage, levels: int) -> np.ndarray:
    """floor(v * levels / 256): 0..255 maps onto 0..levels-1."""
    if not 2 <= levels <= 256:
        raise InvalidParameters(f"levels {levels} outside [2, 256]")
    return (gray_array(gray).astype(np.int64) * levels) // 256


def glcm(gray: GrayImage, distance: int = 1, levels: int = 8) -> Glcm:
    """Co-occurrence counts for the four canonical directions."""
    if distance < 1:
        raise InvalidParameters(f"distance must be >= 1, got {distance}")
    q = quantize(gray, levels)
    h, w = q.shape
    if h <= distance or w <= distance:
        raise ImageTooSmall(
            f"{w}x{h} has no pixel pairs at distance {distance}"
        )
    counts = np.zeros((len(DIRECTIONS), levels, levels), dtype=np.int64)
    for d_idx, name in enumerate(DIRECTIONS):
        dy, dx = _DISPLACEMENTS[name]
        dy, dx = dy * distance, dx * distance
        ys = slice(max(0, -dy), h - max(0, dy))
        xs = slice(max(0, -dx), w - max(0, dx))
        a = q[ys, xs]
        b = q[max(0, -dy) + dy : h - max(0, dy) + dy,
              max(0, -dx) + dx : w - max(0, dx) + dx]
        flat = np.bincount((a * levels + b).ravel(), minlength=levels * levels)
        m = flat.reshape(levels, levels)
        counts[d_idx] = m + m.T
    return Glcm(counts=counts, levels=levels, distance=distance)


def haralick_features(p: np.ndarray) -> np.ndarray:
    """The 13 statistics of one normalised co-occurrence matrix.

    Degenerate denominators (zero variance for correlation, zero marginal
    entropy for imc1) return 0 for that statistic; entropies use log base 2
    with 0 log 0 = 0.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise InvalidParameters(f"matrix must be square, got {p.shape}")
    if abs(p.sum() - 1.0) > 1e-6:
        raise NotNormalized(f"matrix sums to {p.sum():.6f}, expected 1")
    L = p.shape[0]
    i = np.arange(L, dtype=np.float64)
    ii, jj = np.meshgrid(i, i, indexing="ij")
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    mu_x = float(i @ px)
    mu_y = float(i @ py)
    var_x = float(((i - mu_x) ** 2) @ px)
    var_y = float(((i - mu_y) ** 2) @ py)

    def entropy(q):
        nz = q[q > 0]
        return float(-(nz * np.log2(nz)).sum())

    asm = float((p * p).sum())
    contrast = float(((ii - jj) ** 2 * p).sum())
    if var_x > 1e-12 and var_y > 1e-12:
        correlation = float(((ii * jj * p).sum() - mu_x * mu_y) / np.sqrt(var_x * var_y))
    else:
        correlation = 0.0
    variance = float(((ii - mu_x) ** 2 * p).sum())
    idm = float((p / (1.0 + (ii - jj) ** 2)).sum())

    k_sum = np.arange(2 * L - 1, dtype=np.float64)
    p_sum = np.zeros(2 * L - 1)
    np.add.at(p_sum, (ii + jj).astype(np.int64).ravel(), p.ravel())
    k_diff = np.arange(L, dtype=np.float64)
    p_diff = np.zeros(L)
    np.add.at(p_diff, np.abs(ii - jj).astype(np.int64).ravel(), p.ravel())

    sum_average = float(k_sum @ p_sum)
    sum_variance = float(((k_sum - sum_average) ** 2) @ p_sum)
    sum_entropy = entropy(p_sum)
    ent = entropy(p.ravel())
    diff_average = float(k_diff @ p_diff)
    difference_variance = float(((k_diff - diff_average) ** 2) @ p_diff)
    difference_entropy = entropy(p_diff)

    hx, hy = entropy(px), entropy(py)
    outer = np.outer(px, py)
    nz = (p > 0) & (outer > 0)
    hxy1 = float(-(p[nz] * np.log2(outer[nz])).sum())
    nz2 = outer > 0
    hxy2 = float(-(outer[nz2] * np.log2(outer[nz2])).sum())
    imc1 = (ent - hxy1) / max(hx, hy) if max(hx, hy) > 1e-12 else 0.0
    imc2 = float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - ent)))))

    return np.array([
        asm, contrast, correlation, variance, idm,
        sum_average, sum_variance, sum_entropy, ent,
        difference_variance, difference_entropy, imc1, imc2,
    ])


def haralick_all(g: Glcm) -> np.ndarray:
    """13 statistics for each direction, concatenated in direction order."""
    return np.concatenate([haralick_features(m) for m in g.normalized()])
