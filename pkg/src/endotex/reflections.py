"""Specular highlight handling: detection, inpainting, clean-region cropping.

Endoscopic frames carry bright specular reflections that corrupt texture
statistics.  Detection is two-pass: pixels above a strong threshold are
flagged outright, then moderately bright pixels (above a weak threshold) that
touch an already-flagged pixel in their 8-neighbourhood are absorbed, repeated
to a fixpoint.  Removal either paints the flagged pixels in from the clean
boundary or crops to the largest rectangle free of flags.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import GrayImage, Image, gray_array, rgb_array, to_gray
from .errors import (
    DimensionMismatch,
    InvalidThresholds,
    MaskCoversEverything,
    NoCleanRegion,
)

STRONG_THRESHOLD = 180
WEAK_THRESHOLD = 130


@dataclass
class ReflectionMask:
    """Boolean raster, True where a pixel is considered specular."""

    flags: np.ndarray

    def __post_init__(self):
        self.flags = np.asarray(self.flags, dtype=bool)
        if self.flags.ndim != 2:
            raise DimensionMismatch(f"mask must be 2-D, got {self.flags.shape}")

    @property
    def count(self) -> int:
        return int(self.flags.sum())


def _check_thresholds(strong: int, weak: int) -> None:
    if not (0 <= weak <= 255 and 0 <= strong <= 255):
        raise InvalidThresholds(f"thresholds ({strong}, {weak}) outside [0, 255]")
    if weak > strong:
        raise InvalidThresholds(f"weak threshold {weak} exceeds strong {strong}")


def _expand_weak(strong_mask: np.ndarray, weak_mask: np.ndarray) -> np.ndarray:
    """Grow the strong mask into weak pixels that touch it (8-adjacency),
    iterated until no pixel changes."""
    mask = strong_mask.copy()
    kernel = np.ones((3, 3), dtype=bool)
    while True:
        touching = ndimage.binary_dilation(mask, structure=kernel)
        grown = mask | (weak_mask & touching)
        if np.array_equal(grown, mask):
            return mask
        mask = grown


def detect_reflections(
    gray: GrayImage,
    strong: int = STRONG_THRESHOLD,
    weak: int = WEAK_THRESHOLD,
) -> ReflectionMask:
    """Two-pass specular detection on an intensity image."""
    _check_thresholds(strong, weak)
    v = gray_array(gray)
    return ReflectionMask(_expand_weak(v > strong, v > weak))


def detect_reflections_rgb(
    img: Image,
    strong: int = STRONG_THRESHOLD,
    weak: int = WEAK_THRESHOLD,
) -> ReflectionMask:
    """Channel-wise variant: a pixel passes a threshold if any channel does."""
    _check_thresholds(strong, weak)
    v = rgb_array(img).max(axis=2)
    return ReflectionMask(_expand_weak(v > strong, v > weak))


def remove_reflections(img: Image, mask: ReflectionMask) -> Image:
    """Paint flagged pixels in from the clean region.

    Flagged pixels are filled in order of increasing distance from the
    unflagged region; each takes the inverse-distance-weighted average of its
    already-known 8-neighbours.  Unflagged pixels pass through untouched.
    """
    flags = mask.flags
    if flags.shape != img.data.shape[:2]:
        raise DimensionMismatch(
            f"mask {flags.shape} vs image {img.data.shape[:2]}"
        )
    if not flags.any():
        return img
    if flags.all():
        raise MaskCoversEverything("every pixel is flagged; nothing to fill from")

    h, w = flags.shape
    out = img.data.astype(np.float64).copy()
    known = ~flags
    # distance of each flagged pixel to the nearest clean pixel drives the
    # fill order: boundary pixels first, cavity centres last
    dist = ndimage.distance_transform_edt(flags)
    ys, xs = np.nonzero(flags)
    queue = sorted(zip(dist[ys, xs], ys.tolist(), xs.tolist()))
    heapq.heapify(queue)
    offsets = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    weights = {off: 1.0 / float(np.hypot(*off)) for off in offsets}
    deferred: list[tuple[float, int, int]] = []
    while queue:
        d, y, x = heapq.heappop(queue)
        acc = np.zeros(3)
        wsum = 0.0
        for off in offsets:
            ny, nx = y + off[0], x + off[1]
            if 0 <= ny < h and 0 <= nx < w and known[ny, nx]:
                wgt = weights[off]
                acc += wgt * out[ny, nx]
                wsum += wgt
        if wsum == 0.0:
            # neighbours at the same distance not filled yet; retry later
            deferred.append((d, y, x))
            continue
        out[y, x] = acc / wsum
        known[y, x] = True
        if deferred:
            for item in deferred:
                heapq.heappush(queue, item)
            deferred.clear()
    result = img.data.copy()
    filled = np.clip(np.round(out), 0, 255).astype(np.uint8)
    result[flags] = filled[flags]
    return Image(result)


def crop_reflection(img: Image, mask: ReflectionMask, min_size: int = 3) -> Image:
    """Crop to the largest axis-aligned rectangle containing no flagged pixel.

    Ties on area prefer the topmost, then leftmost rectangle.  Raises
    :class:`NoCleanRegion` if the best rectangle is below ``min_size`` on
    either axis.
    """
    flags = mask.flags
    if flags.shape != img.data.shape[:2]:
        raise DimensionMismatch(f"mask {flags.shape} vs image {img.data.shape[:2]}")
    if not flags.any():
        return img
    top, left, height, width = _largest_clean_rect(flags)
    if height < min_size or width < min_size:
        raise NoCleanRegion(
            f"largest clean rectangle {width}x{height} below {min_size}x{min_size}"
        )
    return Image(img.data[top : top + height, left : left + width])


def _largest_clean_rect(flags: np.ndarray) -> tuple[int, int, int, int]:
    """Maximal all-clean rectangle via the histogram-of-heights scan.

    Returns (top, left, height, width) of the best rectangle; ties on area are
    broken by smaller top row, then smaller left column.
    """
    h, w = flags.shape
    heights = np.zeros(w, dtype=np.int64)
    best = (0, 0, 0, 0)
    best_area = 0
    for row in range(h):
        heights = np.where(~flags[row], heights + 1, 0)
        stack: list[tuple[int, int]] = []  # (start column, height), increasing
        for col in range(w + 1):
            cur = int(heights[col]) if col < w else 0
            start = col
            while stack and stack[-1][1] >= cur:
                idx, hgt = stack.pop()
                area = hgt * (col - idx)
                top = row - hgt + 1
                if area > best_area or (
                    area == best_area and area > 0 and (top, idx) < best[:2]
                ):
                    best_area = area
                    best = (top, idx, hgt, col - idx)
                start = idx
            if cur > 0 and (not stack or stack[-1][1] < cur):
                stack.append((start, cur))
    return best


def preprocess_image(
    img: Image,
    mode: str = "inpaint",
    strong: int = STRONG_THRESHOLD,
    weak: int = WEAK_THRESHOLD,
    channelwise: bool = False,
) -> tuple[Image, ReflectionMask]:
    """Detect reflections and remove them per ``mode``.

    ``mode`` is one of ``none`` (detection only), ``inpaint``, or ``crop``.
    """
    if channelwise:
        mask = detect_reflections_rgb(img, strong, weak)
    else:
        mask = detect_reflections(to_gray(img), strong, weak)
    if mode == "none":
        return img, mask
    if mode == "inpaint":
        return remove_reflections(img, mask), mask
    if mode == "crop":
        return crop_reflection(img, mask), mask
    raise InvalidThresholds(f"unknown preprocessing mode {mode!r}")
