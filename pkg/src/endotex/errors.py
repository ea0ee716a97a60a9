"""Exception types shared across the pipeline.

Every stage raises a named subclass of :class:`EndotexError` so callers (and
the CLI) can map failures to exit codes without string matching.
"""


class EndotexError(Exception):
    """Base class for all library errors."""


# --- image / dataset loading ------------------------------------------------

class UnreadableFile(EndotexError):
    """File is missing, truncated, or not decodable."""


class UnsupportedFormat(EndotexError):
    """Decoded file is not an 8-bit RGB/grayscale raster."""


class ZeroDimension(EndotexError):
    """Image has a zero width or height."""


class EmptyClassDirectory(EndotexError):
    """A class directory contains no readable images."""


class NoClasses(EndotexError):
    """Dataset root contains no class directories."""


class FractionOutOfRange(EndotexError):
    """Split fraction outside (0, 1)."""


class IoFailure(EndotexError):
    """Filesystem write/read failed."""


class SchemaMismatch(EndotexError):
    """Stored header/schema disagrees with the data being read or appended."""


# --- preprocessing ----------------------------------------------------------

class InvalidThresholds(EndotexError):
    """Reflection thresholds outside [0, 255] or weak > strong."""


class DimensionMismatch(EndotexError):
    """Mask and image shapes disagree."""


class MaskCoversEverything(EndotexError):
    """No unflagged pixel left to propagate colour from."""


class NoCleanRegion(EndotexError):
    """No flag-free rectangle of usable size exists."""


# --- augmentation -----------------------------------------------------------

class MaxTooSmall(EndotexError):
    """Requested per-class total below the current majority class size."""


class EmptyDataset(EndotexError):
    """Operation requires at least one sample."""


# --- feature extraction -----------------------------------------------------

class ImageTooSmall(EndotexError):
    """Image smaller than the descriptor's minimum working size."""


class NotFitted(EndotexError):
    """Descriptor/model state used before fitting."""


class NotNormalized(EndotexError):
    """Co-occurrence matrix does not sum to one."""


class GridLargerThanImage(EndotexError):
    """Spatial grid has more cells than pixels along an axis."""


class InvalidParameters(EndotexError):
    """Descriptor or model parameters outside their documented domain."""


class MissingSample(EndotexError):
    """External feature table lacks a row for a requested sample."""


class DimensionDrift(EndotexError):
    """Per-sample external vectors disagree in length."""


# --- classification ---------------------------------------------------------

class SingleClass(EndotexError):
    """Training labels contain fewer than two classes."""


class EmptyMatrix(EndotexError):
    """Feature matrix has no rows or no columns."""


class NonFinite(EndotexError):
    """NaN or infinity where finite values are required."""


class ShapeMismatch(EndotexError):
    """Arrays have incompatible shapes for the requested operation."""


class ClassSetMismatch(EndotexError):
    """Ensemble members disagree on the class set."""


class LengthMismatch(EndotexError):
    """Paired sequences differ in length."""


class AllZeroWeights(EndotexError):
    """Voting weights sum to zero."""


class MissingClassInstance(EndotexError):
    """A stratified subsample cannot represent every class."""


# --- genetic search ---------------------------------------------------------

class TooFewFeatures(EndotexError):
    """Feature-subset search needs at least two candidate features."""


class EmptyInput(EndotexError):
    """Probability matrix or label vector is empty."""


# --- evaluation -------------------------------------------------------------

class TooFewRuns(EndotexError):
    """Significance test needs at least two observations per group."""


class SingleClassPresent(EndotexError):
    """Ranking metric undefined when only one class occurs."""


class EmptyBatch(EndotexError):
    """Benchmark received no images."""


# --- configuration ----------------------------------------------------------

class ConfigError(EndotexError):
    """Configuration file is invalid or internally inconsistent."""


class DataError(EndotexError):
    """Input data failed validation at runtime."""
