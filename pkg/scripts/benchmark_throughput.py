#!/usr/bin/env python3
"""Measure end-to-end throughput: extract + normalise + classify per frame.

Uses 256x256 synthetic frames and the throughput-oriented descriptor preset;
reports single-worker FPS (the comparable number) plus an informational
thread-pool figure.  Also times single-row inference through the layered
forest cascade.
"""

from __future__ import annotations

import argparse

import numpy as np

from endotex.cascade import CascadeParams, train_cascade
from endotex.core import Image
from endotex.evaluation import fps_benchmark
from endotex.features import ColumnNormalizer, FeatureExtractor, FeatureSpec
from endotex.models import ForestParams, train_forest


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--frames", type=int, default=100)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--preset", default="realtime")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    frames = [
        Image(rng.integers(0, 256, (args.size, args.size, 3)).astype(np.uint8))
        for _ in range(args.frames)
    ]
    extractor = FeatureExtractor(FeatureSpec.preset(args.preset))

    fit = np.vstack([extractor.extract(f) for f in frames[:20]])
    labels = rng.integers(0, 4, fit.shape[0])
    norm = ColumnNormalizer.fit(fit)
    forest = train_forest(norm.transform(fit), labels, args.seed, ForestParams())

    def classify(frame):
        vec = extractor.extract(frame)
        return forest.predict_proba(norm.transform(np.atleast_2d(vec)))

    result = fps_benchmark(classify, frames, warmup=5, workers=1)
    print(f"extract+predict ({args.preset}, {args.size}x{args.size}): "
          f"{result.fps:.1f} FPS, mean {result.mean_latency_ms:.2f} ms, "
          f"p95 {result.p95_latency_ms:.2f} ms")
    if args.workers > 1:
        pooled = fps_benchmark(classify, frames, warmup=0, workers=args.workers)
        print(f"thread pool x{args.workers} (informational): {pooled.fps:.1f} FPS")

    cascade = train_cascade(norm.transform(fit), labels, args.seed, CascadeParams())
    rows = [norm.transform(np.atleast_2d(extractor.extract(f))) for f in frames[:50]]
    cas = fps_benchmark(cascade.predict_proba, rows, warmup=5, workers=1)
    print(f"cascade single-row inference: {cas.fps:.1f} FPS, "
          f"mean {cas.mean_latency_ms:.2f} ms")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
