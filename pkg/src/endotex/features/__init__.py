"""Texture and colour descriptors plus the combined extraction front-end."""

from .local_patterns import (
    DominantPatterns,
    clbp_histograms,
    dlbp_fit,
    dlbp_project,
    lbp_codes,
    lbp_histogram,
    ltp_histograms,
    rilbp_histogram,
    rotation_invariant_codes,
)
from .cooccurrence import Glcm, glcm, haralick_all, haralick_features, HARALICK_NAMES
from .tamura import tamura_features
from .edges import edge_histogram, phog_descriptor
from .color import color_correlogram, color_histogram, color_layout
from .gabor import gabor_bank, gabor_features, gabor_kernel
from .composite import cedd_descriptor, fcth_descriptor, jcd_descriptor
from .extraction import (
    ColumnNormalizer,
    FeatureExtractor,
    FeatureSpec,
    load_external_features,
    spec_blocks,
)

__all__ = [
    "DominantPatterns",
    "clbp_histograms",
    "dlbp_fit",
    "dlbp_project",
    "lbp_codes",
    "lbp_histogram",
    "ltp_histograms",
    "rilbp_histogram",
    "rotation_invariant_codes",
    "Glcm",
    "glcm",
    "haralick_all",
    "haralick_features",
    "HARALICK_NAMES",
    "tamura_features",
    "edge_histogram",
    "phog_descriptor",
    "color_correlogram",
    "color_histogram",
    "color_layout",
    "gabor_bank",
    "gabor_features",
    "gabor_kernel",
    "cedd_descriptor",
    "fcth_descriptor",
    "jcd_descriptor",
    "ColumnNormalizer",
    "FeatureExtractor",
    "FeatureSpec",
    "load_external_features",
    "spec_blocks",
]
