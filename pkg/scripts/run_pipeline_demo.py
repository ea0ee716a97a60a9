#!/usr/bin/env python3
"""Run the full pipeline on a generated synthetic corpus and print the report.

Everything lands under the chosen work directory: corpus, intermediate
artifacts, model bundle, and evaluation report.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from make_synthetic_corpus import make_corpus

from endotex.pipeline import PipelineConfig, full_pipeline


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("workdir")
    ap.add_argument("--images", type=int, default=200)
    ap.add_argument("--size", type=int, default=96)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--model", default="forest",
                    choices=("tree", "forest", "extra", "logistic", "mlp", "cascade"))
    ap.add_argument("--thresholds", action="store_true",
                    help="also evolve per-class decision thresholds")
    args = ap.parse_args()

    work = Path(args.workdir)
    corpus = work / "corpus"
    if not corpus.exists():
        make_corpus(corpus, args.images, args.size, args.seed)

    config = PipelineConfig(
        dataset_root=str(corpus),
        output_dir=str(work / "run"),
        seed=args.seed,
        feature_preset="realtime",
        model=args.model,
        model_params={"n_trees": 30} if args.model in ("forest", "extra") else {},
        optimize_thresholds=args.thresholds,
    )
    summary = full_pipeline(config)
    print(json.dumps(summary, indent=2, sort_keys=True))
    print((work / "run" / "report.txt").read_text())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
