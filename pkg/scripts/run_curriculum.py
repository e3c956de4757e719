#!/usr/bin/env python3
"""Run the full three-stage curriculum for both components on the synthetic
benchmark, print the per-stage validation metrics, and emit the selected
mixed-stage manifest."""

import argparse
import json
import time
from pathlib import Path

from retrievelab import synth
from retrievelab.corpus import StageTag
from retrievelab.curriculum import CurriculumConfig, run_curriculum
from retrievelab.evalsel import select_components


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--benchmark-seed", type=int, default=synth.BENCHMARK_SEEDS[0])
    parser.add_argument("--seed", type=int, default=1, help="training seed")
    parser.add_argument("--out", default="runs/curriculum", help="output directory")
    args = parser.parse_args()

    bench = synth.make_benchmark(args.benchmark_seed)
    out = Path(args.out)
    t0 = time.perf_counter()
    registry = run_curriculum(
        bench.corpus,
        bench.train_queries,
        bench.qrels,
        CurriculumConfig(seed=args.seed),
        out,
        eval_queries=bench.eval_queries,
        eval_qrels=bench.qrels,
    )
    elapsed = time.perf_counter() - t0

    print(f"curriculum finished in {elapsed:.1f}s; validation metrics:")
    for component in ("embedder", "reranker"):
        for stage in StageTag:
            entry = registry.get(component, stage)
            metrics = ", ".join(f"{k}={v:.4f}" for k, v in sorted(entry.metrics.items()))
            print(f"  {component:9s} {stage.name:7s} {metrics}")

    manifest = select_components(registry)
    manifest_path = out / "selected_manifest.json"
    manifest_path.write_text(json.dumps(manifest.to_dict(), indent=2))
    print(f"selected: embedder Stage{manifest.embedder_stage}, "
          f"reranker Stage{manifest.reranker_stage} -> {manifest_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
