"""Class balancing by image augmentation and by resampling.

Balancing targets the majority class size: every class is topped up to the
same per-class total by generating augmented copies of its images.  The
default policy spreads copies evenly — each image gets ceil(max/n) - 1 copies
and the surplus is trimmed from the tail so class totals land exactly on the
target.  A ``literal`` policy instead evaluates the per-image copy count as
n_class * (max - 1) / majority, which under-fills small classes; it is kept
for comparison runs.

Augmented copies are produced by a fixed cycle of operations (rotate, flips,
random crop, random resize, noise), each fully determined by (operation,
seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .core import Dataset, Image, derive_seed, load_image, save_image
from .errors import EmptyDataset, ImageTooSmall, InvalidParameters, MaxTooSmall

OP_CYCLE = ("rotate", "hflip", "vflip", "crop", "resize", "noise")
MIN_CROP = 256


@dataclass
class AugmentPlan:
    """Per-image copy counts plus the per-class total they achieve."""

    copies: dict[Path, int]
    target_per_class: int
    policy: str = "default"

    @property
    def total_new(self) -> int:
        return sum(self.copies.values())


def plan_balancing(
    dataset: Dataset, max_images: int | None = None, policy: str = "default"
) -> AugmentPlan:
    """Decide how many augmented copies each image receives.

    ``max_images`` defaults to the majority class size.  With the default
    policy every class ends at exactly ``max_images`` samples.
    """
    if not dataset.samples:
        raise EmptyDataset("cannot balance an empty dataset")
    counts = dataset.class_counts()
    majority = max(counts.values())
    if max_images is None:
        max_images = majority
    if max_images < majority:
        raise MaxTooSmall(f"target {max_images} below majority class size {majority}")
    if policy not in ("default", "literal"):
        raise InvalidParameters(f"unknown balancing policy {policy!r}")

    copies: dict[Path, int] = {}
    for idx, name in enumerate(dataset.class_names):
        members = sorted(p for p, c in dataset.samples if c == idx)
        n = len(members)
        if policy == "literal":
            per_image = int(round(n * (max_images - 1) / majority))
            for p in members:
                copies[p] = per_image
            continue
        per_image = math.ceil(max_images / n) - 1
        excess = n * (per_image + 1) - max_images
        for i, p in enumerate(members):
            copies[p] = per_image - (1 if i >= n - excess else 0)
    return AugmentPlan(copies=copies, target_per_class=max_images, policy=policy)


# --- individual operations ----------------------------------------------------


def rotate(img: Image, angle: float) -> Image:
    """Rotate about the centre, keeping the frame size; corners fill black."""
    pil = PILImage.fromarray(img.data)
    out = pil.rotate(angle, resample=PILImage.BILINEAR, expand=False, fillcolor=(0, 0, 0))
    return Image(np.asarray(out, dtype=np.uint8))


def hflip(img: Image) -> Image:
    return Image(img.data[:, ::-1])


def vflip(img: Image) -> Image:
    return Image(img.data[::-1, :])


def random_crop(img: Image, rng: np.random.Generator, floor: int = MIN_CROP) -> Image:
    """Crop a random window no smaller than ``floor`` per axis (capped at the
    image size; images below 2x2 cannot be cropped)."""
    h, w = img.data.shape[:2]
    if h < 2 or w < 2:
        raise ImageTooSmall(f"{w}x{h} too small to crop")
    ch = int(rng.integers(max(1, min(floor, h - 1)), h))
    cw = int(rng.integers(max(1, min(floor, w - 1)), w))
    top = int(rng.integers(0, h - ch + 1))
    left = int(rng.integers(0, w - cw + 1))
    return Image(img.data[top : top + ch, left : left + cw])


def random_resize(img: Image, rng: np.random.Generator, floor: int = MIN_CROP) -> Image:
    """Rescale to a random size between ``floor`` (or half size) and full size."""
    h, w = img.data.shape[:2]
    nh = int(rng.integers(max(1, min(floor, h)), h + 1))
    nw = int(rng.integers(max(1, min(floor, w)), w + 1))
    pil = PILImage.fromarray(img.data).resize((nw, nh), resample=PILImage.BILINEAR)
    return Image(np.asarray(pil, dtype=np.uint8))


def inject_noise(img: Image, ratio: float, rng: np.random.Generator) -> Image:
    """Replace a ``ratio`` fraction of pixels with uniform random colours."""
    if not 0.0 <= ratio <= 1.0:
        raise InvalidParameters(f"noise ratio {ratio} outside [0, 1]")
    h, w = img.data.shape[:2]
    n = int(round(ratio * h * w))
    out = img.data.copy()
    if n:
        flat = rng.choice(h * w, size=n, replace=False)
        out.reshape(-1, 3)[flat] = rng.integers(0, 256, size=(n, 3), dtype=np.uint8)
    return Image(out)


def apply_augmentation(
    img: Image, op: str, seed: int, noise_ratio: float = 0.05
) -> Image:
    """Apply one named operation; identical (op, seed) gives identical bytes."""
    rng = np.random.default_rng(seed)
    if op == "rotate":
        return rotate(img, float(rng.uniform(0.0, 360.0)))
    if op == "hflip":
        return hflip(img)
    if op == "vflip":
        return vflip(img)
    if op == "crop":
        return random_crop(img, rng)
    if op == "resize":
        return random_resize(img, rng)
    if op == "noise":
        return inject_noise(img, noise_ratio, rng)
    raise InvalidParameters(f"unknown augmentation op {op!r}")


def execute_plan(
    dataset: Dataset,
    plan: AugmentPlan,
    out_root: str | Path,
    seed: int,
    noise_ratio: float = 0.05,
) -> Dataset:
    """Materialise a balancing plan on disk.

    Originals are copied through; each augmented copy of ``image.png`` is
    written as ``image__aug<k>.png`` with the operation cycle advanced per
    copy.  Per-copy seeds depend only on (master seed, relative path, copy
    index), so partial or parallel runs produce identical bytes.
    """
    out_root = Path(out_root)
    samples: list[tuple[Path, int]] = []
    for path, cls in dataset.samples:
        rel = path.relative_to(dataset.root)
        img = load_image(path)
        dst = out_root / rel
        save_image(img, dst)
        samples.append((dst, cls))
        for k in range(plan.copies.get(path, 0)):
            op = OP_CYCLE[k % len(OP_CYCLE)]
            item_seed = derive_seed(seed, str(rel), k)
            aug = apply_augmentation(img, op, item_seed, noise_ratio)
            aug_dst = dst.with_name(f"{dst.stem}__aug{k}{dst.suffix}")
            save_image(aug, aug_dst)
            samples.append((aug_dst, cls))
    samples.sort(key=lambda s: (s[1], s[0]))
    return Dataset(out_root, list(dataset.class_names), samples)


def resample_to_ratio(
    dataset: Dataset, ratio: float = 1.10, seed: int = 0
) -> Dataset:
    """Upsample every class with replacement to round(ratio * majority size).

    Each class keeps its originals once and draws the remainder uniformly with
    replacement, so at ratio 1.0 an already-balanced dataset passes through
    (up to ordering).
    """
    if not dataset.samples:
        raise EmptyDataset("cannot resample an empty dataset")
    if ratio < 1.0:
        raise InvalidParameters(f"ratio {ratio} must be >= 1.0")
    majority = max(dataset.class_counts().values())
    target = int(round(ratio * majority))
    samples: list[tuple[Path, int]] = []
    for idx in range(len(dataset.class_names)):
        members = sorted((p for p, c in dataset.samples if c == idx))
        samples.extend((p, idx) for p in members)
        extra = target - len(members)
        if extra > 0:
            rng = np.random.default_rng(derive_seed(seed, "resample", idx))
            draws = rng.integers(0, len(members), size=extra)
            samples.extend((members[i], idx) for i in draws)
    return Dataset(dataset.root, list(dataset.class_names), samples)
