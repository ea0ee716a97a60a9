"""Core data types: images, labelled datasets, feature matrices.

Images are thin wrappers around uint8 numpy arrays (row-major, origin at the
top-left corner).  Datasets are directory-per-class trees on disk; samples are
always enumerated in sorted order so downstream stages see a stable layout.
"""

from __future__ import annotations

import csv
import io
import warnings
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

from .errors import (
    EmptyClassDirectory,
    FractionOutOfRange,
    ImageTooSmall,
    IoFailure,
    NoClasses,
    SchemaMismatch,
    UnreadableFile,
    UnsupportedFormat,
    ZeroDimension,
)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp"}


@dataclass
class Image:
    """8-bit RGB raster, ``data`` shaped (height, width, 3)."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.uint8)
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise UnsupportedFormat(f"expected (h, w, 3) array, got {self.data.shape}")
        if self.data.shape[0] == 0 or self.data.shape[1] == 0:
            raise ZeroDimension("image has a zero dimension")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass
class GrayImage:
    """8-bit single-channel raster, ``data`` shaped (height, width)."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.uint8)
        if self.data.ndim != 2:
            raise UnsupportedFormat(f"expected (h, w) array, got {self.data.shape}")
        if self.data.shape[0] == 0 or self.data.shape[1] == 0:
            raise ZeroDimension("image has a zero dimension")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def to_gray(img: "Image | np.ndarray") -> GrayImage:
    """Luma conversion: round(0.299 R + 0.587 G + 0.114 B), clamped to [0, 255]."""
    rgb = rgb_array(img).astype(np.float64)
    luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return GrayImage(np.clip(np.round(luma), 0, 255).astype(np.uint8))


def rgb_array(img) -> np.ndarray:
    """(h, w, 3) uint8 view of an :class:`Image` or compatible array."""
    if isinstance(img, Image):
        return img.data
    return Image(np.asarray(img)).data


def gray_array(img) -> np.ndarray:
    """(h, w) uint8 view; RGB inputs pass through the luma conversion."""
    if isinstance(img, GrayImage):
        return img.data
    if isinstance(img, Image):
        return to_gray(img).data
    arr = np.asarray(img)
    if arr.ndim == 3:
        return to_gray(arr).data
    return GrayImage(arr).data


def load_image(path: str | Path, min_size: int | None = None) -> Image:
    """Decode a PNG/JPEG/BMP file into an RGB :class:`Image`.

    ``min_size`` optionally rejects images smaller than ``min_size`` pixels on
    either axis (the descriptor path needs at least a 3x3 neighbourhood).
    """
    path = Path(path)
    try:
        with PILImage.open(path) as im:
            im.load()
            if im.mode not in ("RGB", "L", "P", "RGBA", "LA", "I;16", "1"):
                raise UnsupportedFormat(f"{path}: unsupported mode {im.mode}")
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except FileNotFoundError as exc:
        raise UnreadableFile(f"{path}: no such file") from exc
    except UnidentifiedImageError as exc:
        raise UnreadableFile(f"{path}: not a decodable image") from exc
    except OSError as exc:
        raise UnreadableFile(f"{path}: {exc}") from exc
    if arr.size == 0:
        raise ZeroDimension(f"{path}: zero-sized image")
    if min_size is not None and (arr.shape[0] < min_size or arr.shape[1] < min_size):
        raise ImageTooSmall(
            f"{path}: {arr.shape[1]}x{arr.shape[0]} below minimum {min_size}x{min_size}"
        )
    return Image(arr)


def save_image(img: Image | GrayImage, path: str | Path) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        PILImage.fromarray(img.data).save(path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def save_mask_png(mask: np.ndarray, path: str | Path) -> None:
    """Persist a boolean mask as a 1-bit PNG (white = flagged)."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        PILImage.fromarray(np.asarray(mask, dtype=bool)).convert("1").save(path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# --- datasets ----------------------------------------------------------------


@dataclass
class Dataset:
    """Labelled image collection: ``samples`` holds (path, class_index) pairs."""

    root: Path
    class_names: list[str]
    samples: list[tuple[Path, int]]

    def __len__(self) -> int:
        return len(self.samples)

    def class_counts(self) -> dict[str, int]:
        counts = {name: 0 for name in self.class_names}
        for _, idx in self.samples:
            counts[self.class_names[idx]] += 1
        return counts


def load_dataset(root: str | Path) -> Dataset:
    """Enumerate a directory-per-class tree.

    Class names are the subdirectory names in sorted order; samples within a
    class are sorted by filename.  A class directory without any image file is
    an error rather than a silent empty class.
    """
    root = Path(root)
    if not root.is_dir():
        raise UnreadableFile(f"{root}: not a directory")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise NoClasses(f"{root}: no class subdirectories")
    class_names = [p.name for p in class_dirs]
    samples: list[tuple[Path, int]] = []
    for idx, cdir in enumerate(class_dirs):
        files = sorted(
            p for p in cdir.iterdir()
            if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
        )
        if not files:
            raise EmptyClassDirectory(f"{cdir}: no image files")
        samples.extend((p, idx) for p in files)
    return Dataset(root=root, class_names=class_names, samples=samples)


def split_dataset(
    dataset: Dataset, train_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Stratified train/test split.

    Each class is shuffled with its own derived seed and split so the train
    side receives round(fraction * n) samples, kept within [1, n-1] whenever
    the class has at least two samples.  Single-sample classes go to the train
    side with a warning.
    """
    if not 0.0 < train_fraction < 1.0:
        raise FractionOutOfRange(f"train fraction {train_fraction} outside (0, 1)")
    train: list[tuple[Path, int]] = []
    test: list[tuple[Path, int]] = []
    for idx in range(len(dataset.class_names)):
        members = [s for s in dataset.samples if s[1] == idx]
        if len(members) == 1:
            warnings.warn(
                f"class {dataset.class_names[idx]!r} has a single sample; "
                "it is placed in the train split",
                stacklevel=2,
            )
            train.extend(members)
            continue
        rng = np.random.default_rng(derive_seed(seed, "split", idx))
        order = rng.permutation(len(members))
        n_train = int(round(train_fraction * len(members)))
        n_train = min(max(n_train, 1), len(members) - 1)
        train.extend(members[i] for i in order[:n_train])
        test.extend(members[i] for i in order[n_train:])
    train.sort(key=lambda s: (s[1], s[0]))
    test.sort(key=lambda s: (s[1], s[0]))
    mk = lambda samples: Dataset(dataset.root, list(dataset.class_names), samples)
    return mk(train), mk(test)


def derive_seed(master: int, *parts) -> int:
    """Stable child seed from a master seed and hashable context parts.

    Strings are folded in via crc32 so the derivation is platform-stable.
    """
    # the part count disambiguates trailing zero parts, which SeedSequence
    # would otherwise absorb as padding
    entropy = [int(master) & 0xFFFFFFFF, len(parts)]
    for part in parts:
        if isinstance(part, str):
            entropy.append(zlib.crc32(part.encode("utf-8")))
        else:
            entropy.append(int(part) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


# --- feature matrices ---------------------------------------------------------


@dataclass
class FeatureMatrix:
    """Row-per-sample feature table with integer class labels."""

    values: np.ndarray          # (n, d) float64
    column_names: list[str]
    labels: np.ndarray          # (n,) int
    sample_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.values.ndim != 2:
            raise SchemaMismatch(f"values must be 2-D, got {self.values.shape}")
        if self.values.shape[1] != len(self.column_names):
            raise SchemaMismatch(
                f"{self.values.shape[1]} columns vs {len(self.column_names)} names"
            )
        if self.values.shape[0] != self.labels.shape[0]:
            raise SchemaMismatch(
                f"{self.values.shape[0]} rows vs {self.labels.shape[0]} labels"
            )

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def columns(self) -> int:
        return self.values.shape[1]


def save_features(
    matrix: FeatureMatrix, path: str | Path, append: bool = False
) -> None:
    """Write a feature matrix as CSV: header row, 9-significant-digit values,
    final column is the integer class label.

    Appending to an existing file requires identical column names.
    """
    path = Path(path)
    header = list(matrix.column_names) + ["label"]
    mode = "a" if append and path.exists() else "w"
    if mode == "a":
        with open(path, newline="") as fh:
            existing = next(csv.reader(fh), None)
        if existing != header:
            raise SchemaMismatch(f"{path}: existing header differs")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, mode, newline="") as fh:
            writer = csv.writer(fh)
            if mode == "w":
                writer.writerow(header)
            for row, label in zip(matrix.values, matrix.labels):
                writer.writerow([format(v, ".9g") for v in row] + [int(label)])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_features(path: str | Path) -> FeatureMatrix:
    """Read a CSV produced by :func:`save_features`."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or header[-1] != "label":
        raise SchemaMismatch(f"{path}: missing header or label column")
    names = header[:-1]
    values, labels = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise SchemaMismatch(f"{path}:{lineno}: {len(row)} fields, expected {len(header)}")
        try:
            values.append([float(v) for v in row[:-1]])
            labels.append(int(row[-1]))
        except ValueError as exc:
            raise SchemaMismatch(f"{path}:{lineno}: non-numeric field") from exc
    arr = np.array(values, dtype=np.float64) if values else np.empty((0, len(names)))
    return FeatureMatrix(arr, names, np.array(labels, dtype=np.int64))
