"""Texture-feature pipeline for endoscopic image classification.

The package covers the full path from raw endoscopy frames to per-class
decisions: specular-reflection cleanup, class balancing by augmentation,
a family of hand-rolled texture/colour descriptors, tree and perceptron
classifiers with ensembling and a forest cascade, and genetic searches for
decision thresholds and feature subsets.
"""

from .augment import execute_plan, plan_balancing, resample_to_ratio
from .cascade import CascadeModel, CascadeParams, data_fraction_experiment, train_cascade
from .core import (
    Dataset,
    FeatureMatrix,
    GrayImage,
    Image,
    derive_seed,
    load_dataset,
    load_features,
    load_image,
    save_features,
    save_image,
    split_dataset,
    to_gray,
)
from .errors import ConfigError, DataError, EndotexError
from .evaluation import (
    EvalReport,
    auc_one_vs_rest,
    confusion_matrix,
    evaluate_predictions,
    fps_benchmark,
    mcc_from_confusion,
    weighted_f1,
    welch_t_test,
)
from .features import ColumnNormalizer, FeatureExtractor, FeatureSpec
from .genetic import (
    SubsetSearchParams,
    ThresholdSearchParams,
    apply_thresholds,
    crossover_mod1,
    optimize_thresholds,
    select_features,
    snap_to_alphabet,
)
from .models import (
    ForestParams,
    MlpParams,
    TreeParams,
    load_model,
    save_model,
    train_bagged,
    train_forest,
    train_mlp,
    train_stacked,
    train_tree,
    train_weighted_ensemble,
)
from .pipeline import PipelineBundle, PipelineConfig, full_pipeline, preprocess_dataset
from .reflections import (
    crop_reflection,
    detect_reflections,
    detect_reflections_rgb,
    preprocess_image,
    remove_reflections,
)

__version__ = "0.1.0"

__all__ = [
    "CascadeModel",
    "CascadeParams",
    "ColumnNormalizer",
    "ConfigError",
    "DataError",
    "Dataset",
    "EndotexError",
    "EvalReport",
    "FeatureExtractor",
    "FeatureMatrix",
    "FeatureSpec",
    "ForestParams",
    "GrayImage",
    "Image",
    "MlpParams",
    "PipelineBundle",
    "PipelineConfig",
    "SubsetSearchParams",
    "ThresholdSearchParams",
    "TreeParams",
    "apply_thresholds",
    "auc_one_vs_rest",
    "confusion_matrix",
    "crop_reflection",
    "crossover_mod1",
    "data_fraction_experiment",
    "derive_seed",
    "detect_reflections",
    "detect_reflections_rgb",
    "evaluate_predictions",
    "execute_plan",
    "fps_benchmark",
    "full_pipeline",
    "load_dataset",
    "load_features",
    "load_image",
    "load_model",
    "mcc_from_confusion",
    "optimize_thresholds",
    "plan_balancing",
    "preprocess_dataset",
    "preprocess_image",
    "remove_reflections",
    "resample_to_ratio",
    "save_features",
    "save_image",
    "save_model",
    "select_features",
    "snap_to_alphabet",
    "split_dataset",
    "to_gray",
    "train_bagged",
    "train_cascade",
    "train_forest",
    "train_mlp",
    "train_stacked",
    "train_tree",
    "train_weighted_ensemble",
    "weighted_f1",
    "welch_t_test",
]
