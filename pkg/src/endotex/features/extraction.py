"""Descriptor selection, combined extraction, and column normalisation.

A :class:`FeatureSpec` names which descriptors run and with what parameters;
the block layout (names, sizes, order) is a pure function of the spec, so two
extractors built from equal specs emit identical columns.  Extraction happens
in a fixed canonical order regardless of how the spec was written.

External per-image vectors (e.g. CNN embeddings produced elsewhere) join the
pipeline through a CSV keyed by sample id; they are appended as a trailing
block.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path

import numpy as np

from ..core import Dataset, FeatureMatrix, GrayImage, Image, load_image, to_gray
from ..errors import (
    DimensionDrift,
    InvalidParameters,
    IoFailure,
    MissingSample,
    NotFitted,
    SchemaMismatch,
    UnreadableFile,
)
from .color import color_correlogram, color_histogram, color_layout
from .composite import cedd_descriptor, fcth_descriptor
from .cooccurrence import HARALICK_NAMES, DIRECTIONS, glcm, haralick_all
from .edges import edge_histogram, phog_descriptor
from .gabor import gabor_bank, gabor_features
from .local_patterns import (
    DominantPatterns,
    _canonical_table,
    clbp_histograms,
    dlbp_fit,
    dlbp_project,
    lbp_histogram,
    ltp_histograms,
    rilbp_histogram,
)
from .tamura import TAMURA_NAMES, tamura_features

SCHEMA_VERSION = 1


@dataclass
class FeatureSpec:
    """Which descriptors to extract, and their parameters."""

    lbp_radii: tuple[int, ...] = ()
    ltp: bool = False
    ltp_radius: int = 1
    ltp_dead_band: int = 5
    clbp: bool = False
    clbp_radius: int = 1
    dlbp: bool = False
    dlbp_coverage: float = 0.8
    rilbp: bool = False
    rilbp_samples: int = 8
    rilbp_radius: float = 1.0
    glcm: bool = False
    glcm_distance: int = 1
    glcm_levels: int = 8
    tamura: bool = False
    tamura_window: int = 16
    edge_hist: bool = False
    edge_bins: int = 8
    phog: bool = False
    phog_levels: int = 2
    phog_bins: int = 8
    color_layout: bool = False
    layout_grid: tuple[int, int] = (4, 4)
    layout_bins: int = 8
    color_hist: bool = False
    hist_space: str = "rgb"
    hist_bins: int = 8
    acc: bool = False
    acc_distances: tuple[int, ...] = (1, 2, 3, 4)
    acc_colors: int = 64
    gabor: bool = False
    gabor_orientations: int = 4
    gabor_scales: tuple[tuple[float, float], ...] = ((2.0, 0.25), (4.0, 0.125))
    cedd: bool = False
    fcth: bool = False
    jcd: bool = False
    external: str | None = None

    @classmethod
    def selected(cls) -> "FeatureSpec":
        """The descriptor set the pipeline ships with: pattern histograms at
        five radii plus colour, edge, Gabor, perceptual, and composite
        blocks."""
        return cls(
            lbp_radii=(1, 2, 3, 4, 5),
            tamura=True,
            edge_hist=True,
            color_layout=True,
            acc=True,
            gabor=True,
            cedd=True,
            fcth=True,
            jcd=True,
        )

    @classmethod
    def realtime(cls) -> "FeatureSpec":
        """Throughput-oriented subset: pattern histograms plus composite and
        colour descriptors only."""
        return cls(
            lbp_radii=(1, 2, 3, 4, 5),
            color_layout=True,
            color_hist=True,
            acc=True,
            cedd=True,
            fcth=True,
            jcd=True,
        )

    @classmethod
    def full(cls) -> "FeatureSpec":
        """Every descriptor except the fitted dominant-pattern block."""
        return cls(
            lbp_radii=(1, 2, 3, 4, 5),
            ltp=True,
            clbp=True,
            rilbp=True,
            glcm=True,
            tamura=True,
            edge_hist=True,
            phog=True,
            color_layout=True,
            color_hist=True,
            acc=True,
            gabor=True,
            cedd=True,
            fcth=True,
            jcd=True,
        )

    PRESETS = ("selected", "realtime", "full")

    @classmethod
    def preset(cls, name: str) -> "FeatureSpec":
        if name not in cls.PRESETS:
            raise InvalidParameters(f"unknown preset {name!r}; choose from {cls.PRESETS}")
        return getattr(cls, name)()

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise SchemaMismatch(f"unknown feature spec fields: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("lbp_radii", "acc_distances"):
            if key in kwargs and kwargs[key] is not None:
                kwargs[key] = tuple(kwargs[key])
        if "layout_grid" in kwargs and kwargs["layout_grid"] is not None:
            kwargs["layout_grid"] = tuple(kwargs["layout_grid"])
        if "gabor_scales" in kwargs and kwargs["gabor_scales"] is not None:
            kwargs["gabor_scales"] = tuple(tuple(s) for s in kwargs["gabor_scales"])
        return cls(**kwargs)


@dataclass
class Block:
    """One contiguous slice of the combined feature vector."""

    name: str
    columns: list[str]
    distribution: bool  # True when the block is a normalised histogram

    @property
    def size(self) -> int:
        return len(self.columns)


def _histogram_block(name: str, size: int, prefix: str = "p") -> Block:
    return Block(name, [f"{name}.{prefix}{i:03d}" for i in range(size)], True)


def spec_blocks(
    spec: FeatureSpec,
    dlbp_patterns: DominantPatterns | None = None,
    external_dim: int | None = None,
) -> list[Block]:
    """Ordered block layout implied by a spec.

    The dominant-pattern and external blocks have data-dependent sizes, so
    their fitted state must be supplied when enabled.
    """
    blocks: list[Block] = []
    for r in spec.lbp_radii:
        blocks.append(_histogram_block(f"lbp_r{r}", 256))
    if spec.ltp:
        blocks.append(_histogram_block(f"ltp_r{spec.ltp_radius}.pos", 256))
        blocks.append(_histogram_block(f"ltp_r{spec.ltp_radius}.neg", 256))
    if spec.clbp:
        blocks.append(_histogram_block(f"clbp_r{spec.clbp_radius}.sign", 256))
        blocks.append(_histogram_block(f"clbp_r{spec.clbp_radius}.mag", 256))
    if spec.dlbp:
        if dlbp_patterns is None:
            raise NotFitted("dominant-pattern block enabled but not fitted")
        cols = [f"dlbp.p{int(p):03d}" for p in dlbp_patterns.patterns]
        blocks.append(Block("dlbp", cols, True))
    if spec.rilbp:
        _, classes = _canonical_table(spec.rilbp_samples)
        cols = [f"rilbp.c{int(c):03d}" for c in classes]
        blocks.append(Block("rilbp", cols, True))
    if spec.glcm:
        cols = [
            f"glcm_d{spec.glcm_distance}.{d}.{s}"
            for d in DIRECTIONS
            for s in HARALICK_NAMES
        ]
        blocks.append(Block(f"glcm_d{spec.glcm_distance}", cols, False))
    if spec.tamura:
        blocks.append(Block("tamura", [f"tamura.{n}" for n in TAMURA_NAMES], False))
    if spec.edge_hist:
        blocks.append(_histogram_block("edge", spec.edge_bins, prefix="b"))
    if spec.phog:
        cols = []
        for level in range(spec.phog_levels + 1):
            cells = 2**level
            for c in range(cells * cells):
                cols.extend(
                    f"phog.l{level}.c{c:02d}.b{b}" for b in range(spec.phog_bins)
                )
        blocks.append(Block("phog", cols, False))  # normalised per level, not overall
    if spec.color_layout:
        rows, colcnt = spec.layout_grid
        for i in range(rows):
            for j in range(colcnt):
                blocks.append(
                    _histogram_block(f"layout.r{i}c{j}", spec.layout_bins, prefix="b")
                )
    if spec.color_hist:
        names = ("r", "g", "b") if spec.hist_space == "rgb" else ("h", "s", "v")
        for ch in names:
            blocks.append(_histogram_block(f"chist.{ch}", spec.hist_bins, prefix="b"))
    if spec.acc:
        cols = [
            f"acc.d{k}.c{c:03d}" for k in spec.acc_distances for c in range(spec.acc_colors)
        ]
        blocks.append(Block("acc", cols, False))
    if spec.gabor:
        bank = gabor_bank(spec.gabor_orientations, spec.gabor_scales)
        cols = []
        for name, _ in bank:
            cols.extend([f"gabor.{name}.mean", f"gabor.{name}.std"])
        blocks.append(Block("gabor", cols, False))
    if spec.cedd:
        for ch in ("r", "g", "b", "edge"):
            blocks.append(_histogram_block(f"cedd.{ch}", 8, prefix="b"))
    if spec.fcth:
        blocks.append(Block("fcth", [f"fcth.c{i}t{j}" for i in range(8) for j in range(8)], True))
    if spec.jcd:
        cols = [f"jcd.cedd.{ch}.b{i}" for ch in ("r", "g", "b", "edge") for i in range(8)]
        cols += [f"jcd.fcth.c{i}t{j}" for i in range(8) for j in range(8)]
        blocks.append(Block("jcd", cols, False))  # sub-blocks normalised individually
    if spec.external:
        if external_dim is None:
            raise NotFitted("external block enabled but no table loaded")
        blocks.append(Block("ext", [f"ext.{i:04d}" for i in range(external_dim)], False))
    return blocks


def load_external_features(path: str | Path) -> dict[str, np.ndarray]:
    """Read an id-keyed CSV of per-sample vectors.

    First column is the sample id (relative image path); the rest are floats.
    A header row is tolerated (detected by non-numeric trailing fields).  All
    rows must agree on dimensionality.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    table: dict[str, np.ndarray] = {}
    dim = None
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row:
            continue
        try:
            vec = np.array([float(v) for v in row[1:]], dtype=np.float64)
        except ValueError:
            if lineno == 1:
                continue  # header
            raise SchemaMismatch(f"{path}:{lineno}: non-numeric vector entry")
        if dim is None:
            dim = vec.size
        elif vec.size != dim:
            raise DimensionDrift(
                f"{path}:{lineno}: vector length {vec.size} != {dim}"
            )
        table[row[0]] = vec
    if not table:
        raise SchemaMismatch(f"{path}: no data rows")
    return table


@dataclass
class ColumnNormalizer:
    """Per-column min-max scaling frozen from a training matrix.

    Transform maps the training range onto [0, 1] and clamps unseen values
    into it; constant columns map to 0.
    """

    col_min: np.ndarray
    col_max: np.ndarray

    @classmethod
    def fit(cls, values: np.ndarray) -> "ColumnNormalizer":
        values = np.asarray(values, dtype=np.float64)
        return cls(values.min(axis=0), values.max(axis=0))

    def transform(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if values.shape[-1] != self.col_min.size:
            raise DimensionDrift(
                f"{values.shape[-1]} columns, normalizer fitted on {self.col_min.size}"
            )
        span = self.col_max - self.col_min
        safe = np.where(span > 0, span, 1.0)
        out = (values - self.col_min) / safe
        out = np.where(span > 0, out, 0.0)
        return np.clip(out, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"col_min": self.col_min.tolist(), "col_max": self.col_max.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "ColumnNormalizer":
        return cls(
            np.asarray(data["col_min"], dtype=np.float64),
            np.asarray(data["col_max"], dtype=np.float64),
        )


class FeatureExtractor:
    """Runs every enabled descriptor and concatenates blocks in spec order."""

    def __init__(
        self,
        spec: FeatureSpec,
        dlbp_patterns: DominantPatterns | None = None,
        external: dict[str, np.ndarray] | None = None,
    ):
        if spec.external and external is None:
            external = load_external_features(spec.external)
        self.spec = spec
        self.dlbp_patterns = dlbp_patterns
        self.external = external
        ext_dim = None
        if external is not None:
            ext_dim = next(iter(external.values())).size
        if spec.dlbp and dlbp_patterns is None:
            # layout is unknown until fit_dlbp supplies the pattern set;
            # extract() refuses to run in the meantime
            self.blocks = spec_blocks(replace(spec, dlbp=False), None, ext_dim)
        else:
            self.blocks = spec_blocks(spec, dlbp_patterns, ext_dim)
        self.column_names = [c for b in self.blocks for c in b.columns]
        self._bank = (
            gabor_bank(spec.gabor_orientations, spec.gabor_scales)
            if spec.gabor
            else None
        )

    @property
    def dimension(self) -> int:
        return len(self.column_names)

    def extract(self, img: Image, sample_id: str | None = None) -> np.ndarray:
        """Feature vector for one image, in the block order of the spec."""
        spec = self.spec
        gray: GrayImage | None = None

        def g() -> GrayImage:
            nonlocal gray
            if gray is None:
                gray = to_gray(img)
            return gray

        parts: list[np.ndarray] = []
        for r in spec.lbp_radii:
            parts.append(lbp_histogram(g(), r))
        if spec.ltp:
            parts.append(ltp_histograms(g(), spec.ltp_radius, spec.ltp_dead_band))
        if spec.clbp:
            parts.append(clbp_histograms(g(), spec.clbp_radius))
        if spec.dlbp:
            if self.dlbp_patterns is None:
                raise NotFitted("dominant-pattern block enabled but not fitted")
            hist = lbp_histogram(g(), 1)
            parts.append(dlbp_project(hist, self.dlbp_patterns))
        if spec.rilbp:
            parts.append(rilbp_histogram(g(), spec.rilbp_samples, spec.rilbp_radius))
        if spec.glcm:
            parts.append(haralick_all(glcm(g(), spec.glcm_distance, spec.glcm_levels)))
        if spec.tamura:
            parts.append(tamura_features(g(), spec.tamura_window))
        if spec.edge_hist:
            parts.append(edge_histogram(g(), spec.edge_bins))
        if spec.phog:
            parts.append(phog_descriptor(g(), spec.phog_levels, spec.phog_bins))
        if spec.color_layout:
            parts.append(color_layout(img, spec.layout_grid, spec.layout_bins))
        if spec.color_hist:
            parts.append(color_histogram(img, spec.hist_space, spec.hist_bins))
        if spec.acc:
            parts.append(color_correlogram(img, spec.acc_distances, spec.acc_colors))
        if spec.gabor:
            parts.append(gabor_features(g(), self._bank))
        cedd_vec = cedd_descriptor(img) if spec.cedd or spec.jcd else None
        fcth_vec = fcth_descriptor(img) if spec.fcth or spec.jcd else None
        if spec.cedd:
            parts.append(cedd_vec)
        if spec.fcth:
            parts.append(fcth_vec)
        if spec.jcd:
            parts.append(cedd_vec)
            parts.append(fcth_vec)
        if spec.external:
            if sample_id is None or sample_id not in self.external:
                raise MissingSample(f"no external vector for {sample_id!r}")
            parts.append(self.external[sample_id])
        vec = np.concatenate(parts) if parts else np.empty(0)
        if vec.size != self.dimension:
            raise SchemaMismatch(
                f"extracted {vec.size} values, layout says {self.dimension}"
            )
        return vec

    def _extract_sample(self, item: tuple[str, str]) -> np.ndarray:
        path, sample_id = item
        return self.extract(load_image(path, min_size=3), sample_id)

    def extract_dataset(self, dataset: Dataset, jobs: int = 1) -> FeatureMatrix:
        """Feature matrix for a dataset, rows in dataset sample order."""
        items = [
            (str(p), str(p.relative_to(dataset.root))) for p, _ in dataset.samples
        ]
        labels = np.array([c for _, c in dataset.samples], dtype=np.int64)
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(self._extract_sample, items, chunksize=8))
        else:
            rows = [self._extract_sample(it) for it in items]
        values = np.vstack(rows) if rows else np.empty((0, self.dimension))
        return FeatureMatrix(
            values, list(self.column_names), labels, [sid for _, sid in items]
        )

    def fit_dlbp(self, dataset: Dataset) -> DominantPatterns:
        """Fit the dominant-pattern set from radius-1 histograms of a corpus."""
        hists = [
            lbp_histogram(to_gray(load_image(p, min_size=3)), 1)
            for p, _ in dataset.samples
        ]
        self.dlbp_patterns = dlbp_fit(hists, self.spec.dlbp_coverage)
        ext_dim = None
        if self.external is not None:
            ext_dim = next(iter(self.external.values())).size
        self.blocks = spec_blocks(self.spec, self.dlbp_patterns, ext_dim)
        self.column_names = [c for b in self.blocks for c in b.columns]
        return self.dlbp_patterns


def save_schema(extractor: FeatureExtractor, path: str | Path, class_names=None) -> None:
    """Machine-readable layout: block names, sizes, flags, and column names."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "spec": extractor.spec.to_dict(),
        "blocks": [
            {"name": b.name, "size": b.size, "distribution": b.distribution}
            for b in extractor.blocks
        ],
        "columns": extractor.column_names,
    }
    if class_names is not None:
        doc["class_names"] = list(class_names)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
