"""Local binary pattern family: LBP, LTP, CLBP, dominant patterns, and a
rotation-invariant variant with circular bilinear sampling.

The square-ring variants compare the eight neighbours at radius r against the
centre pixel, reading the ring from the top-left corner clockwise and packing
bits most-significant first:

    TL T TR
    L     R      ->  bits: TL T TR R BR B BL L  ->  8-bit code
    BL B BR

A neighbour contributes 1 when its value is >= the centre.  Border pixels
without a full ring are skipped; histograms are normalised over the pixels
that do have one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..core import GrayImage, gray_array
from ..errors import ImageTooSmall, InvalidParameters, NotFitted

# unit offsets (dy, dx) from top-left clockwise; scaled by the radius
RING_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


def _ring_views(v: np.ndarray, radius: int) -> tuple[np.ndarray, list[np.ndarray]]:
    h, w = v.shape
    r = radius
    if r < 1:
        raise InvalidParameters(f"radius must be >= 1, got {r}")
    if h < 2 * r + 1 or w < 2 * r + 1:
        raise ImageTooSmall(f"{w}x{h} has no interior at radius {r}")
    center = v[r : h - r, r : w - r]
    neighbours = [
        v[r + dy * r : h - r + dy * r, r + dx * r : w - r + dx * r]
        for dy, dx in RING_OFFSETS
    ]
    return center, neighbours


def lbp_codes(gray: GrayImage, radius: int = 1) -> np.ndarray:
    """Per-pixel LBP codes for the interior (shape (h-2r, w-2r))."""
    center, neighbours = _ring_views(gray_array(gray), radius)
    codes = np.zeros(center.shape, dtype=np.int32)
    for nb in neighbours:
        codes = (codes << 1) | (nb >= center)
    return codes


def lbp_histogram(gray: GrayImage, radius: int = 1) -> np.ndarray:
    """256-bin normalised LBP histogram."""
    codes = lbp_codes(gray, radius)
    return np.bincount(codes.ravel(), minlength=256) / codes.size


def ltp_histograms(gray: GrayImage, radius: int = 1, dead_band: int = 5) -> np.ndarray:
    """Ternary patterns split into two 256-bin histograms (upper then lower).

    The upper pattern sets a bit when neighbour > centre + dead_band, the
    lower when neighbour < centre - dead_band; values inside the band count
    for neither.  With dead_band 0 the upper histogram is a strict-inequality
    LBP.
    """
    if dead_band < 0:
        raise InvalidParameters(f"dead band must be >= 0, got {dead_band}")
    center, neighbours = _ring_views(gray_array(gray).astype(np.int16), radius)
    upper = np.zeros(center.shape, dtype=np.int32)
    lower = np.zeros(center.shape, dtype=np.int32)
    for nb in neighbours:
        upper = (upper << 1) | (nb > center + dead_band)
        lower = (lower << 1) | (nb < center - dead_band)
    n = center.size
    return np.concatenate([
        np.bincount(upper.ravel(), minlength=256) / n,
        np.bincount(lower.ravel(), minlength=256) / n,
    ])


def clbp_histograms(gray: GrayImage, radius: int = 1) -> np.ndarray:
    """Completed patterns: sign component (identical to LBP) followed by a
    magnitude component binarised against the global mean absolute difference
    (strictly greater, so a constant image yields the all-zero pattern)."""
    center, neighbours = _ring_views(gray_array(gray).astype(np.int16), radius)
    sign = np.zeros(center.shape, dtype=np.int32)
    mags = np.empty((8,) + center.shape, dtype=np.int16)
    for i, nb in enumerate(neighbours):
        sign = (sign << 1) | (nb >= center)
        mags[i] = np.abs(center - nb)
    threshold = mags.mean()
    mag = np.zeros(center.shape, dtype=np.int32)
    for i in range(8):
        mag = (mag << 1) | (mags[i] > threshold)
    n = center.size
    return np.concatenate([
        np.bincount(sign.ravel(), minlength=256) / n,
        np.bincount(mag.ravel(), minlength=256) / n,
    ])


# --- dominant patterns ---------------------------------------------------------


@dataclass
class DominantPatterns:
    """Pattern codes retained after a coverage fit, most frequent first."""

    patterns: np.ndarray
    coverage: float
    mode: str = "pooled"


def _dominant_prefix(counts: np.ndarray, coverage: float) -> np.ndarray:
    order = np.argsort(-counts, kind="stable")
    cum = np.cumsum(counts[order])
    total = float(cum[-1])
    if total == 0.0:
        return order[:0]
    k = int(np.searchsorted(cum, coverage * total * (1.0 - 1e-12))) + 1
    return order[:k]


def dlbp_fit(
    histograms, coverage: float = 0.8, mode: str = "pooled"
) -> DominantPatterns:
    """Choose the dominant pattern set from a corpus of LBP histograms.

    ``pooled`` sums all histograms and keeps the minimal most-frequent prefix
    whose cumulative mass reaches ``coverage``.  ``union`` computes that
    prefix per image and unions the sets; the result is still ordered by
    pooled frequency.
    """
    if not 0.0 < coverage <= 1.0:
        raise InvalidParameters(f"coverage {coverage} outside (0, 1]")
    if mode not in ("pooled", "union"):
        raise InvalidParameters(f"unknown dominant-pattern mode {mode!r}")
    hists = [np.asarray(h, dtype=np.float64) for h in histograms]
    if not hists:
        raise InvalidParameters("need at least one histogram to fit")
    pooled = np.sum(hists, axis=0)
    if mode == "pooled":
        patterns = _dominant_prefix(pooled, coverage)
    else:
        keep = set()
        for h in hists:
            keep.update(_dominant_prefix(h, coverage).tolist())
        members = np.array(sorted(keep), dtype=np.int64)
        members = members[np.argsort(-pooled[members], kind="stable")]
        patterns = members
    return DominantPatterns(np.asarray(patterns, dtype=np.int64), coverage, mode)


def dlbp_project(histogram: np.ndarray, dominant: DominantPatterns) -> np.ndarray:
    """Restrict a 256-bin histogram to the dominant set and renormalise.

    An image whose mass falls entirely outside the set projects to the zero
    vector (with a warning) rather than dividing by zero.
    """
    if dominant.patterns.size == 0:
        raise NotFitted("dominant pattern set is empty")
    h = np.asarray(histogram, dtype=np.float64)
    picked = h[dominant.patterns]
    total = picked.sum()
    if total == 0.0:
        warnings.warn("histogram mass entirely outside dominant set", stacklevel=2)
        return np.zeros_like(picked)
    return picked / total


# --- rotation-invariant variant --------------------------------------------------


@lru_cache(maxsize=None)
def _canonical_table(P: int) -> tuple[np.ndarray, np.ndarray]:
    """Map each P-bit code to its rotation-minimal value and class index."""
    size = 1 << P
    mask = size - 1
    canon = np.empty(size, dtype=np.int64)
    for c in range(size):
        canon[c] = min(((c >> k) | (c << (P - k))) & mask for k in range(P))
    classes = np.unique(canon)
    index = np.zeros(size, dtype=np.int64)
    index[classes] = np.arange(classes.size)
    return index[canon], classes


def rotation_invariant_codes(
    gray: GrayImage, P: int = 8, R: float = 1.0
) -> np.ndarray:
    """Rotation-minimal codes from a circle of P bilinear samples at radius R.

    Sample i sits at (x + R cos(2 pi i / P), y - R sin(2 pi i / P)); bit i is
    set when the sampled value is >= the centre.  The code is the minimum over
    all cyclic rotations.
    """
    if P < 1 or P > 24:
        raise InvalidParameters(f"P {P} outside [1, 24]")
    if R < 1.0:
        raise InvalidParameters(f"R must be >= 1, got {R}")
    v = gray_array(gray).astype(np.float64)
    h, w = v.shape
    margin = math.ceil(R)
    if h < 2 * margin + 1 or w < 2 * margin + 1:
        raise ImageTooSmall(f"{w}x{h} has no interior at radius {R}")
    center = v[margin : h - margin, margin : w - margin]
    codes = np.zeros(center.shape, dtype=np.int64)
    for i in range(P):
        theta = 2.0 * np.pi * i / P
        dx = round(R * math.cos(theta), 12)
        dy = round(-R * math.sin(theta), 12)
        sample = _bilinear_shift(v, dy, dx, margin)
        codes |= (sample >= center).astype(np.int64) << i
    canon_index, classes = _canonical_table(P)
    return classes[canon_index[codes]]


def rilbp_histogram(gray: GrayImage, P: int = 8, R: float = 1.0) -> np.ndarray:
    """Histogram over the canonical rotation classes (36 bins for P = 8)."""
    canon_index, classes = _canonical_table(P)
    codes = rotation_invariant_codes(gray, P, R)
    idx = canon_index[codes]
    return np.bincount(idx.ravel(), minlength=classes.size) / idx.size


def _bilinear_shift(v: np.ndarray, dy: float, dx: float, margin: int) -> np.ndarray:
    """Sample v at a constant offset from every interior pixel."""
    h, w = v.shape
    y0, x0 = math.floor(dy), math.floor(dx)
    fy, fx = dy - y0, dx - x0
    corners = []
    for cy, wy in ((y0, 1.0 - fy), (y0 + 1, fy)):
        if wy <= 1e-12:
            continue
        for cx, wx in ((x0, 1.0 - fx), (x0 + 1, fx)):
            if wx <= 1e-12:
                continue
            corners.append((cy, cx, wy * wx))
    out = np.zeros((h - 2 * margin, w - 2 * margin), dtype=np.float64)
    for cy, cx, wgt in corners:
        out += wgt * v[margin + cy : h - margin + cy, margin + cx : w - margin + cx]
    return out
