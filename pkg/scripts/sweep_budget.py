#!/usr/bin/env python3
"""Recall as a function of the retrieval budget K for every embedder stage of
a finished curriculum run; writes a plot-ready CSV."""

import argparse
from pathlib import Path

from retrievelab import synth
from retrievelab.checkpoint import load_checkpoint
from retrievelab.corpus import StageTag
from retrievelab.evalsel import sweep_recall_budget, write_curve_csv
from retrievelab.pipeline import build_index


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--run-dir", default="runs/curriculum",
                        help="directory produced by run_curriculum.py")
    parser.add_argument("--benchmark-seed", type=int, default=synth.BENCHMARK_SEEDS[0])
    parser.add_argument("--ks", default="20,60,100")
    parser.add_argument("--out", default="runs/curriculum/recall_budget.csv")
    args = parser.parse_args()

    bench = synth.make_benchmark(args.benchmark_seed)
    ks = [int(k) for k in args.ks.split(",")]
    run_dir = Path(args.run_dir)
    curves = []
    for stage in StageTag:
        ckpt = load_checkpoint(run_dir / f"embedder_{stage.name.lower()}.ckpt")
        index = build_index(ckpt, bench.corpus)
        curve = sweep_recall_budget(ckpt, index, bench.eval_queries, bench.qrels, ks)
        curves.append(curve)
        print(f"{stage.name:7s} " + "  ".join(f"R@{k}={r:.4f}" for k, r in curve.points))
    write_curve_csv(curves, args.out)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
