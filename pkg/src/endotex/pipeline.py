"""End-to-end pipeline: preprocess, augment, extract, train, evaluate.

Every stage is deterministic given the config (stage seeds derive from the
master seed), and every artifact lands under the configured output directory
tagged with the config hash.  Timing information goes to a separate
``run_meta.json`` so the reports themselves are byte-reproducible.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .augment import execute_plan, plan_balancing, resample_to_ratio
from .cascade import CascadeParams, train_cascade
from .core import (
    Dataset,
    FeatureMatrix,
    derive_seed,
    load_dataset,
    load_image,
    save_features,
    save_image,
    split_dataset,
)
from .errors import ConfigError
from .evaluation import evaluate_predictions, save_report
from .features import (
    ColumnNormalizer,
    FeatureExtractor,
    FeatureSpec,
)
from .features.extraction import save_schema
from .features.local_patterns import DominantPatterns
from .genetic import (
    SubsetSearchParams,
    ThresholdSearchParams,
    apply_thresholds,
    optimize_thresholds,
    select_features,
)
from .models import (
    ForestParams,
    LogisticParams,
    MlpParams,
    TreeParams,
    model_from_dict,
    model_to_dict,
    train_bagged,
    train_forest,
    train_logistic,
    train_mlp,
    train_stacked,
    train_tree,
    train_weighted_ensemble,
)
from .reflections import preprocess_image

CONFIG_SCHEMA_VERSION = 1
BUNDLE_FORMAT_VERSION = 1

_MODEL_CHOICES = ("tree", "forest", "extra", "logistic", "mlp", "cascade")


@dataclass
class PipelineConfig:
    dataset_root: str
    output_dir: str
    schema_version: int = CONFIG_SCHEMA_VERSION
    seed: int = 0
    train_fraction: float = 0.7
    preprocessing: str = "inpaint"          # none | inpaint | crop
    reflection_strong: int = 180
    reflection_weak: int = 130
    reflection_channelwise: bool = False
    augmentation: str = "balance"           # none | balance | resample
    balance_policy: str = "default"         # default | literal
    max_images: int | None = None
    resample_ratio: float = 1.10
    noise_ratio: float = 0.05
    feature_preset: str = "selected"
    feature_spec: dict | None = None        # explicit spec overrides the preset
    model: str = "forest"
    model_params: dict = field(default_factory=dict)
    ensemble: str = "none"                  # none | bagging | voting | stacked
    n_bags: int = 11
    bag_fraction: float = 0.7
    bag_vote: str = "soft"
    select_features: bool = False
    subset_params: dict = field(default_factory=dict)
    optimize_thresholds: bool = False
    threshold_params: dict = field(default_factory=dict)
    threshold_validation_fraction: float = 0.3
    compute_auc: bool = True
    jobs: int = 1

    def __post_init__(self):
        if self.schema_version != CONFIG_SCHEMA_VERSION:
            raise ConfigError(
                f"config schema version {self.schema_version}, "
                f"expected {CONFIG_SCHEMA_VERSION}"
            )
        if self.preprocessing not in ("none", "inpaint", "crop"):
            raise ConfigError(f"unknown preprocessing {self.preprocessing!r}")
        if self.augmentation not in ("none", "balance", "resample"):
            raise ConfigError(f"unknown augmentation {self.augmentation!r}")
        if self.model not in _MODEL_CHOICES:
            raise ConfigError(f"unknown model {self.model!r}; choose from {_MODEL_CHOICES}")
        if self.ensemble not in ("none", "bagging", "voting", "stacked"):
            raise ConfigError(f"unknown ensemble {self.ensemble!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train fraction {self.train_fraction} outside (0, 1)")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")

    def resolved_spec(self) -> FeatureSpec:
        if self.feature_spec is not None:
            return FeatureSpec.from_dict(self.feature_spec)
        return FeatureSpec.preset(self.feature_preset)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path: str | Path) -> "PipelineConfig":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    def config_hash(self) -> str:
        """Digest of the scientific configuration.

        Output location and worker count do not affect results, so they are
        left out: the same experiment hashed from two checkouts agrees.
        """
        doc = self.to_dict()
        doc.pop("output_dir")
        doc.pop("jobs")
        canon = json.dumps(doc, sort_keys=True)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _trainer_for(config: PipelineConfig):
    """(name, callable(X, y, seed) -> model) resolved from the config."""
    mp = dict(config.model_params)
    if config.model == "tree":
        params = TreeParams(**mp)
        return lambda X, y, s: train_tree(X, y, s, params)
    if config.model == "forest":
        params = ForestParams(**mp)
        return lambda X, y, s: train_forest(X, y, s, params)
    if config.model == "extra":
        mp.setdefault("bootstrap", False)
        mp.setdefault("extra_random", True)
        params = ForestParams(**mp)
        return lambda X, y, s: train_forest(X, y, s, params)
    if config.model == "logistic":
        params = LogisticParams(**mp)
        return lambda X, y, s: train_logistic(X, y, s, params)
    if config.model == "mlp":
        params = MlpParams(**mp) if mp else MlpParams()
        return lambda X, y, s: train_mlp(X, y, s, params)
    if config.model == "cascade":
        params = CascadeParams(**mp)
        return lambda X, y, s: train_cascade(X, y, s, params)
    raise ConfigError(f"unknown model {config.model!r}")


def preprocess_dataset(
    dataset: Dataset,
    out_root: str | Path,
    mode: str,
    strong: int = 180,
    weak: int = 130,
    channelwise: bool = False,
    save_masks: bool = False,
) -> Dataset:
    """Run reflection handling over a dataset, writing results to ``out_root``."""
    from .core import save_mask_png

    out_root = Path(out_root)
    samples = []
    for path, cls in dataset.samples:
        rel = path.relative_to(dataset.root)
        img = load_image(path)
        cleaned, mask = preprocess_image(img, mode, strong, weak, channelwise)
        dst = out_root / rel
        save_image(cleaned, dst)
        if save_masks:
            save_mask_png(mask.flags, out_root / "masks" / rel.with_suffix(".png"))
        samples.append((dst, cls))
    samples.sort(key=lambda s: (s[1], s[0]))
    return Dataset(out_root, list(dataset.class_names), samples)


@dataclass
class PipelineBundle:
    """Everything needed to score new images: spec, scaling, model, labels."""

    model: object
    spec: FeatureSpec
    normalizer: ColumnNormalizer
    class_names: list[str]
    config_hash: str
    dlbp_patterns: DominantPatterns | None = None
    feature_mask: np.ndarray | None = None
    thresholds: np.ndarray | None = None

    def save(self, path: str | Path) -> None:
        doc = {
            "format_version": BUNDLE_FORMAT_VERSION,
            "config_hash": self.config_hash,
            "class_names": self.class_names,
            "feature_spec": self.spec.to_dict(),
            "normalizer": self.normalizer.to_dict(),
            "model": model_to_dict(self.model),
            "dlbp_patterns": (
                None
                if self.dlbp_patterns is None
                else {
                    "patterns": self.dlbp_patterns.patterns.tolist(),
                    "coverage": self.dlbp_patterns.coverage,
                    "mode": self.dlbp_patterns.mode,
                }
            ),
            "feature_mask": (
                None if self.feature_mask is None else self.feature_mask.astype(int).tolist()
            ),
            "thresholds": None if self.thresholds is None else self.thresholds.tolist(),
        }
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "PipelineBundle":
        data = json.loads(Path(path).read_text())
        if data.get("format_version") != BUNDLE_FORMAT_VERSION:
            raise ConfigError(
                f"unsupported bundle format {data.get('format_version')!r}"
            )
        dlbp = None
        if data["dlbp_patterns"] is not None:
            dp = data["dlbp_patterns"]
            dlbp = DominantPatterns(
                np.asarray(dp["patterns"], dtype=np.int64), dp["coverage"], dp["mode"]
            )
        return cls(
            model=model_from_dict(data["model"]),
            spec=FeatureSpec.from_dict(data["feature_spec"]),
            normalizer=ColumnNormalizer.from_dict(data["normalizer"]),
            class_names=list(data["class_names"]),
            config_hash=data["config_hash"],
            dlbp_patterns=dlbp,
            feature_mask=(
                None
                if data["feature_mask"] is None
                else np.asarray(data["feature_mask"], dtype=bool)
            ),
            thresholds=(
                None if data["thresholds"] is None else np.asarray(data["thresholds"])
            ),
        )

    def score_features(self, raw: np.ndarray) -> np.ndarray:
        X = self.normalizer.transform(np.atleast_2d(raw))
        if self.feature_mask is not None:
            X = X[:, self.feature_mask]
        return self.model.predict_proba(X)

    def predict_image(self, img) -> tuple[str, np.ndarray]:
        extractor = FeatureExtractor(self.spec, self.dlbp_patterns)
        probs = self.score_features(extractor.extract(img))
        if self.thresholds is not None:
            idx = int(apply_thresholds(probs, self.thresholds)[0])
        else:
            idx = int(np.argmax(probs[0]))
        return self.class_names[idx], probs[0]


def full_pipeline(config: PipelineConfig) -> dict:
    """Run every configured stage; returns a summary with artifact paths."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = config.config_hash()
    meta: dict = {"config_hash": chash, "stages": {}}

    def _stage(name):
        meta["stages"][name] = {"t0": time.perf_counter()}

    def _done(name):
        meta["stages"][name]["seconds"] = round(
            time.perf_counter() - meta["stages"][name].pop("t0"), 3
        )

    (out / "config_resolved.json").write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"
    )

    _stage("load")
    dataset = load_dataset(config.dataset_root)
    train_ds, test_ds = split_dataset(
        dataset, config.train_fraction, derive_seed(config.seed, "split")
    )
    _done("load")

    if config.preprocessing != "none":
        _stage("preprocess")
        train_ds = preprocess_dataset(
            train_ds, out / "preprocessed" / "train", config.preprocessing,
            config.reflection_strong, config.reflection_weak,
            config.reflection_channelwise,
        )
        test_ds = preprocess_dataset(
            test_ds, out / "preprocessed" / "test", config.preprocessing,
            config.reflection_strong, config.reflection_weak,
            config.reflection_channelwise,
        )
        _done("preprocess")

    if config.augmentation == "balance":
        _stage("augment")
        plan = plan_balancing(train_ds, config.max_images, config.balance_policy)
        train_ds = execute_plan(
            train_ds, plan, out / "augmented", derive_seed(config.seed, "augment"),
            config.noise_ratio,
        )
        _done("augment")
    elif config.augmentation == "resample":
        _stage("augment")
        train_ds = resample_to_ratio(
            train_ds, config.resample_ratio, derive_seed(config.seed, "resample")
        )
        _done("augment")
    else:
        meta["stages"]["augment"] = {"skipped": True}
    if config.preprocessing == "none":
        meta["stages"]["preprocess"] = {"skipped": True}

    _stage("extract")
    spec = config.resolved_spec()
    extractor = FeatureExtractor(spec)
    if spec.dlbp:
        extractor.fit_dlbp(train_ds)
    train_matrix = extractor.extract_dataset(train_ds, config.jobs)
    test_matrix = extractor.extract_dataset(test_ds, config.jobs)
    normalizer = ColumnNormalizer.fit(train_matrix.values)
    X_train = normalizer.transform(train_matrix.values)
    X_test = normalizer.transform(test_matrix.values)
    y_train, y_test = train_matrix.labels, test_matrix.labels
    save_features(
        FeatureMatrix(X_train, train_matrix.column_names, y_train),
        out / "features_train.csv",
    )
    save_features(
        FeatureMatrix(X_test, test_matrix.column_names, y_test),
        out / "features_test.csv",
    )
    save_schema(extractor, out / "feature_schema.json", dataset.class_names)
    _done("extract")

    mask = None
    if config.select_features:
        _stage("select")
        trainer = _trainer_for(config)
        result = select_features(
            X_train, y_train, trainer,
            SubsetSearchParams(**config.subset_params),
            derive_seed(config.seed, "subset"),
        )
        mask = result.mask
        X_train = X_train[:, mask]
        X_test = X_test[:, mask]
        meta["selected_features"] = int(mask.sum())
        _done("select")

    _stage("train")
    trainer = _trainer_for(config)
    if config.ensemble == "bagging":
        model = train_bagged(
            X_train, y_train, trainer,
            n_bags=config.n_bags, bag_fraction=config.bag_fraction,
            vote=config.bag_vote, seed=derive_seed(config.seed, "bagging"),
        )
    elif config.ensemble in ("voting", "stacked"):
        bagged = train_bagged(
            X_train, y_train, trainer,
            n_bags=config.n_bags, bag_fraction=config.bag_fraction,
            seed=derive_seed(config.seed, "bagging"),
        )
        if config.ensemble == "voting":
            model = train_weighted_ensemble(bagged.members, X_train, y_train)
        else:
            model = train_stacked(
                bagged.members, X_train, y_train,
                derive_seed(config.seed, "stack"),
            )
    else:
        model = trainer(X_train, y_train, derive_seed(config.seed, "train"))
    _done("train")

    thresholds = None
    threshold_extras = None
    if config.optimize_thresholds:
        _stage("thresholds")
        rng = np.random.default_rng(derive_seed(config.seed, "threshold_split"))
        val_rows = []
        for c in np.unique(y_train):
            rows = np.nonzero(y_train == c)[0]
            take = max(1, int(round(config.threshold_validation_fraction * rows.size)))
            val_rows.append(rng.choice(rows, size=min(take, rows.size), replace=False))
        val_idx = np.sort(np.concatenate(val_rows))
        probs_val = model.predict_proba(X_train[val_idx])
        # labels mapped into the model's column frame
        val_labels = np.searchsorted(np.asarray(model.classes_), y_train[val_idx])
        result = optimize_thresholds(
            probs_val, val_labels,
            ThresholdSearchParams(**config.threshold_params),
            derive_seed(config.seed, "thresholds"),
        )
        thresholds = result.thresholds
        from .evaluation import weighted_f1
        from .genetic import save_thresholds

        argmax_f1 = weighted_f1(
            val_labels, np.argmax(probs_val, axis=1), probs_val.shape[1]
        )
        threshold_extras = {
            "validation_weighted_f1_argmax": argmax_f1,
            "validation_weighted_f1_thresholded": result.fitness,
        }
        save_thresholds(thresholds, dataset.class_names, out / "thresholds.json")
        _done("thresholds")

    bundle = PipelineBundle(
        model=model,
        spec=spec,
        normalizer=normalizer,
        class_names=dataset.class_names,
        config_hash=chash,
        dlbp_patterns=extractor.dlbp_patterns,
        feature_mask=mask,
        thresholds=thresholds,
    )
    bundle.save(out / "model.json")

    _stage("evaluate")
    probs = model.predict_proba(X_test)
    if thresholds is not None:
        pred_cols = apply_thresholds(probs, thresholds)
    else:
        pred_cols = np.argmax(probs, axis=1)
    classes = np.asarray(model.classes_)
    y_pred = classes[pred_cols]
    report = evaluate_predictions(
        y_test, y_pred,
        n_classes=len(dataset.class_names),
        class_names=dataset.class_names,
        scores=_expand_scores(probs, classes, len(dataset.class_names))
        if config.compute_auc
        else None,
    )
    if threshold_extras is not None:
        report.extras = {"threshold_search": threshold_extras}
    save_report(report, out / "report.json", out / "report.txt")
    _done("evaluate")

    (out / "run_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return {
        "config_hash": chash,
        "output_dir": str(out),
        "accuracy": report.accuracy,
        "weighted_f1": report.weighted["f1"],
        "mcc": report.mcc,
        "report": str(out / "report.json"),
        "model": str(out / "model.json"),
    }


def _expand_scores(probs: np.ndarray, classes: np.ndarray, n_classes: int) -> np.ndarray:
    """Map model-frame probabilities into the full class frame for AUC."""
    if probs.shape[1] == n_classes and np.array_equal(classes, np.arange(n_classes)):
        return probs
    out = np.zeros((probs.shape[0], n_classes))
    out[:, classes] = probs
    return out
