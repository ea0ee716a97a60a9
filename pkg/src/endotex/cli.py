"""Command-line front end.

Exit codes: 0 success, 2 usage error (argparse), 3 bad configuration,
4 data/processing failure.  Failures print a single JSON object to stderr
(``{"error": <type>, "message": <text>}``) so callers can parse them.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .augment import execute_plan, plan_balancing
from .cascade import data_fraction_experiment, save_experiment_csv
from .core import (
    derive_seed,
    load_dataset,
    load_features,
    load_image,
    save_features,
)
from .errors import ConfigError, EndotexError
from .evaluation import evaluate_predictions, fps_benchmark, save_report
from .features import ColumnNormalizer, FeatureExtractor, FeatureSpec
from .features.extraction import save_schema
from .genetic import (
    SubsetSearchParams,
    ThresholdSearchParams,
    apply_thresholds,
    optimize_thresholds,
    save_thresholds,
    select_features,
)
from .pipeline import (
    PipelineBundle,
    PipelineConfig,
    _trainer_for,
    full_pipeline,
    preprocess_dataset,
)


def _spec_from_args(args) -> FeatureSpec:
    if getattr(args, "spec", None):
        return FeatureSpec.from_dict(json.loads(Path(args.spec).read_text()))
    return FeatureSpec.preset(args.preset)


def cmd_run(args) -> int:
    config = PipelineConfig.from_json(args.config)
    if args.output:
        config.output_dir = args.output
    summary = full_pipeline(config)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_preprocess(args) -> int:
    dataset = load_dataset(args.input)
    preprocess_dataset(
        dataset, args.output, args.mode, args.strong, args.weak,
        args.channelwise, args.save_masks,
    )
    print(f"preprocessed {len(dataset.samples)} images -> {args.output}")
    return 0


def cmd_augment(args) -> int:
    dataset = load_dataset(args.input)
    plan = plan_balancing(dataset, args.max_images, args.policy)
    out = execute_plan(dataset, plan, args.output, args.seed, args.noise_ratio)
    print(f"augmented {len(dataset.samples)} -> {len(out.samples)} images in {args.output}")
    return 0


def cmd_extract(args) -> int:
    dataset = load_dataset(args.input)
    spec = _spec_from_args(args)
    extractor = FeatureExtractor(spec)
    if spec.dlbp:
        extractor.fit_dlbp(dataset)
    matrix = extractor.extract_dataset(dataset, args.jobs)
    if args.normalize:
        norm = ColumnNormalizer.fit(matrix.values)
        matrix.values[:] = norm.transform(matrix.values)
    save_features(matrix, args.output)
    if args.schema:
        save_schema(extractor, args.schema, dataset.class_names)
    print(f"wrote {matrix.values.shape[0]} x {matrix.values.shape[1]} features -> {args.output}")
    return 0


def cmd_train(args) -> int:
    config = (
        PipelineConfig.from_json(args.config)
        if args.config
        else PipelineConfig(dataset_root=".", output_dir=".", model=args.model)
    )
    matrix = load_features(args.features)
    if args.schema:
        # the schema written alongside the CSV records the producing spec,
        # so the bundle can extract matching columns from new images
        schema = json.loads(Path(args.schema).read_text())
        spec = FeatureSpec.from_dict(schema["spec"])
        class_names = schema.get("class_names")
    else:
        spec = config.resolved_spec()
        class_names = None
    if class_names is None:
        class_names = [str(c) for c in np.unique(matrix.labels)]
    normalizer = ColumnNormalizer.fit(matrix.values)
    X = normalizer.transform(matrix.values)
    trainer = _trainer_for(config)
    model = trainer(X, matrix.labels, args.seed)
    bundle = PipelineBundle(
        model=model,
        spec=spec,
        normalizer=normalizer,
        class_names=class_names,
        config_hash=config.config_hash(),
    )
    bundle.save(args.output)
    print(f"trained {config.model} on {X.shape[0]} rows -> {args.output}")
    return 0


def cmd_predict(args) -> int:
    bundle = PipelineBundle.load(args.model)
    if args.thresholds:
        from .genetic import load_thresholds

        bundle.thresholds = load_thresholds(args.thresholds, bundle.class_names)
    results = []
    for path in args.images:
        name, probs = bundle.predict_image(load_image(path))
        results.append({
            "image": str(path),
            "prediction": name,
            "scores": {c: round(float(p), 6) for c, p in zip(bundle.class_names, probs)},
        })
    print(json.dumps(results, indent=2))
    return 0


def cmd_select_features(args) -> int:
    matrix = load_features(args.features)
    config = PipelineConfig(dataset_root=".", output_dir=".", model=args.model)
    result = select_features(
        matrix.values, matrix.labels, _trainer_for(config),
        SubsetSearchParams(
            population=args.population, generations=args.generations,
            mutation_rate=args.mutation_rate,
        ),
        args.seed,
    )
    doc = {
        "fitness": result.fitness,
        "n_selected": int(result.mask.sum()),
        "mask": result.mask.astype(int).tolist(),
        "columns": [c for c, keep in zip(matrix.column_names, result.mask) if keep],
    }
    Path(args.output).write_text(json.dumps(doc, indent=2) + "\n")
    print(f"selected {doc['n_selected']}/{result.mask.size} features "
          f"(weighted F1 {result.fitness:.4f}) -> {args.output}")
    return 0


def cmd_thresholds(args) -> int:
    bundle = PipelineBundle.load(args.model)
    matrix = load_features(args.features)
    probs = bundle.score_features(matrix.values)
    labels = np.searchsorted(np.asarray(bundle.model.classes_), matrix.labels)
    result = optimize_thresholds(
        probs, labels,
        ThresholdSearchParams(population=args.population, iterations=args.iterations),
        args.seed,
    )
    save_thresholds(result.thresholds, bundle.class_names, args.output)
    print(f"thresholds (weighted F1 {result.fitness:.4f}) -> {args.output}")
    return 0


def cmd_evaluate(args) -> int:
    bundle = PipelineBundle.load(args.model)
    matrix = load_features(args.features)
    probs = bundle.score_features(matrix.values)
    classes = np.asarray(bundle.model.classes_)
    if args.thresholds:
        from .genetic import load_thresholds

        t = load_thresholds(args.thresholds, bundle.class_names)
        pred = classes[apply_thresholds(probs, t)]
    else:
        pred = classes[np.argmax(probs, axis=1)]
    n_classes = len(bundle.class_names)
    scores = np.zeros((probs.shape[0], n_classes))
    scores[:, classes] = probs
    report = evaluate_predictions(
        matrix.labels, pred, n_classes=n_classes,
        class_names=bundle.class_names, scores=scores,
    )
    save_report(report, args.report, args.text)
    print(report.render_text())
    return 0


def cmd_fraction_experiment(args) -> int:
    train = load_features(args.features)
    test = load_features(args.test)
    rows = data_fraction_experiment(
        train.values, train.labels, test.values, test.labels,
        fractions=tuple(args.fractions), seed=args.seed,
    )
    save_experiment_csv(rows, args.output)
    for row in rows:
        print("  ".join(
            f"{v:.4f}" if isinstance(v, float) else str(v) for v in row.values()
        ))
    return 0


def cmd_bench(args) -> int:
    bundle = PipelineBundle.load(args.model)
    dataset = load_dataset(args.input)
    paths = [p for p, _ in dataset.samples][: args.limit]
    images = [load_image(p) for p in paths]
    extractor = FeatureExtractor(bundle.spec, bundle.dlbp_patterns)

    def work(img):
        return bundle.score_features(extractor.extract(img))

    workers = 1 if args.single_thread else args.workers
    result = fps_benchmark(work, images, warmup=args.warmup, workers=workers)
    doc = result.to_dict()
    doc["fps"] = round(doc["fps"], 2)
    doc["mean_latency_ms"] = round(doc["mean_latency_ms"], 3)
    doc["p95_latency_ms"] = round(doc["p95_latency_ms"], 3)
    print(json.dumps(doc, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="endotex",
        description="Texture-based endoscopic image classification pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="override the configured output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("preprocess", help="detect and handle specular reflections")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--mode", choices=("none", "inpaint", "crop"), default="inpaint")
    p.add_argument("--strong", type=int, default=180)
    p.add_argument("--weak", type=int, default=130)
    p.add_argument("--channelwise", action="store_true")
    p.add_argument("--save-masks", action="store_true")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("augment", help="balance classes with augmented copies")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--policy", choices=("default", "literal"), default="default")
    p.add_argument("--max-images", type=int, default=None)
    p.add_argument("--noise-ratio", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("extract", help="extract texture features to CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--preset", default="selected")
    p.add_argument("--spec", help="JSON feature spec (overrides --preset)")
    p.add_argument("--schema", help="also write the column schema JSON here")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--jobs", type=int,
                   default=int(os.environ.get("ENDOTEX_JOBS", "1")))
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train a classifier on a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--model", default="forest",
                   choices=("tree", "forest", "extra", "logistic", "mlp", "cascade"))
    p.add_argument("--config", help="pipeline config JSON (model settings)")
    p.add_argument("--schema", help="feature schema JSON from `extract --schema` "
                                    "(records the spec for later image prediction)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify images with a trained bundle")
    p.add_argument("--model", required=True)
    p.add_argument("--thresholds")
    p.add_argument("images", nargs="+")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("select-features", help="evolve a feature-column subset")
    p.add_argument("--features", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--model", default="forest")
    p.add_argument("--population", type=int, default=20)
    p.add_argument("--generations", type=int, default=30)
    p.add_argument("--mutation-rate", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_select_features)

    p = sub.add_parser("thresholds", help="evolve per-class decision thresholds")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--population", type=int, default=10)
    p.add_argument("--iterations", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("evaluate", help="score a model on a feature CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--text")
    p.add_argument("--thresholds")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("fraction-experiment",
                       help="cascade accuracy/time vs training-data fraction")
    p.add_argument("--features", required=True, help="training feature CSV")
    p.add_argument("--test", required=True, help="test feature CSV")
    p.add_argument("--output", required=True)
    p.add_argument("--fractions", type=float, nargs="+",
                   default=[0.2, 0.4, 0.6, 0.8, 1.0])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fraction_experiment)

    p = sub.add_parser("bench", help="measure end-to-end images per second")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--limit", type=int, default=200)
    p.add_argument("--warmup", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--single-thread", action="store_true",
                   help="force workers=1 (the mode reported numbers come from)")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 3
    except EndotexError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
