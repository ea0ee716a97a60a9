#!/usr/bin/env python3
"""Generate a deterministic synthetic texture corpus for pipeline runs.

Four texture families stand in for tissue classes, with deliberately skewed
class counts (to exercise balancing) and occasional bright specular blobs
(to exercise reflection cleanup).  Same seed, same corpus, byte for byte.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from endotex.core import Image, derive_seed, save_image

CLASS_WEIGHTS = {"blobs": 0.40, "speckle": 0.25, "smooth": 0.20, "stripes": 0.15}


def _smooth(rng, size):
    gy = np.linspace(60, 190, size)[:, None]
    gx = np.linspace(0, 40, size)[None, :]
    base = gy + gx + rng.normal(0, 3, (size, size))
    img = np.stack([base, base * 0.9, base * 0.8], axis=-1)
    return img


def _blobs(rng, size):
    img = np.full((size, size, 3), 90.0)
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(rng.integers(4, 9)):
        cy, cx = rng.integers(0, size, 2)
        r = rng.integers(size // 12, size // 5)
        blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r**2))
        tint = rng.uniform(40, 120, 3)
        img += blob[..., None] * tint
    img += rng.normal(0, 4, img.shape)
    return img


def _stripes(rng, size):
    yy, xx = np.mgrid[0:size, 0:size]
    angle = rng.uniform(0, np.pi)
    period = rng.uniform(6, 14)
    wave = np.sin(2 * np.pi * (np.cos(angle) * xx + np.sin(angle) * yy) / period)
    base = 120 + 60 * wave + rng.normal(0, 5, (size, size))
    img = np.stack([base * 1.1, base, base * 0.7], axis=-1)
    return img


def _speckle(rng, size):
    base = rng.uniform(40, 200, (size, size))
    img = np.stack([base, rng.uniform(40, 200, (size, size)), base * 0.6], axis=-1)
    return img


MAKERS = {"smooth": _smooth, "blobs": _blobs, "stripes": _stripes, "speckle": _speckle}


def _add_specular(rng, img):
    size = img.shape[0]
    cy, cx = rng.integers(size // 4, 3 * size // 4, 2)
    r = int(rng.integers(2, 5))
    yy, xx = np.mgrid[0:size, 0:size]
    core = (yy - cy) ** 2 + (xx - cx) ** 2 <= r**2
    halo = (yy - cy) ** 2 + (xx - cx) ** 2 <= (r + 1) ** 2
    img[halo] = np.maximum(img[halo], 150.0)
    img[core] = np.maximum(img[core], 220.0)
    return img


def make_corpus(root: str | Path, n_images: int = 200, size: int = 96, seed: int = 0) -> Path:
    """Write the corpus under ``root``; returns the root path."""
    root = Path(root)
    counts = {c: max(1, int(round(w * n_images))) for c, w in CLASS_WEIGHTS.items()}
    for cls, count in sorted(counts.items()):
        for i in range(count):
            rng = np.random.default_rng(derive_seed(seed, cls, i))
            img = MAKERS[cls](rng, size)
            if rng.random() < 0.3:
                img = _add_specular(rng, img)
            arr = np.clip(np.round(img), 0, 255).astype(np.uint8)
            save_image(Image(arr), root / cls / f"{cls}_{i:04d}.png")
    return root


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("output")
    ap.add_argument("--images", type=int, default=200)
    ap.add_argument("--size", type=int, default=96)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    root = make_corpus(args.output, args.images, args.size, args.seed)
    total = sum(1 for _ in root.rglob("*.png"))
    print(f"wrote {total} images under {root}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
