#!/usr/bin/env python3
"""Cascade accuracy and training time as the training set grows.

Trains the layered forest cascade on increasing fractions of a synthetic
feature matrix and prints one metrics row per chunk (the classic
accuracy-vs-data curve).
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from make_synthetic_corpus import make_corpus

from endotex.cascade import CascadeParams, data_fraction_experiment, save_experiment_csv
from endotex.core import derive_seed, load_dataset, split_dataset
from endotex.features import ColumnNormalizer, FeatureExtractor, FeatureSpec


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("workdir")
    ap.add_argument("--images", type=int, default=120)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--fractions", type=float, nargs="+",
                    default=[0.2, 0.4, 0.6, 0.8, 1.0])
    args = ap.parse_args()

    work = Path(args.workdir)
    corpus = work / "corpus"
    if not corpus.exists():
        make_corpus(corpus, args.images, args.size, args.seed)

    dataset = load_dataset(corpus)
    train_ds, test_ds = split_dataset(dataset, 0.7, derive_seed(args.seed, "split"))
    extractor = FeatureExtractor(FeatureSpec.from_dict(
        {"lbp_radii": [1, 2], "color_layout": True, "cedd": True}
    ))
    train = extractor.extract_dataset(train_ds)
    test = extractor.extract_dataset(test_ds)
    norm = ColumnNormalizer.fit(train.values)

    rows = data_fraction_experiment(
        norm.transform(train.values), train.labels,
        norm.transform(test.values), test.labels,
        fractions=tuple(args.fractions), seed=args.seed,
        params=CascadeParams(layers=2, forests_per_layer=3, trees_per_forest=20),
    )
    out = work / "fractions.csv"
    save_experiment_csv(rows, out)
    header = list(rows[0].keys())
    print("  ".join(f"{h:>8}" for h in header))
    for row in rows:
        print("  ".join(
            f"{v:8.4f}" if isinstance(v, float) else f"{v:8d}" for v in row.values()
        ))
    print(f"\nwrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
