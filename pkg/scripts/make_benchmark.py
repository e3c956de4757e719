#!/usr/bin/env python3
"""Write the bundled synthetic benchmark (corpus, query splits, qrels) to disk."""

import argparse

from retrievelab import synth


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=synth.BENCHMARK_SEEDS[0],
                        help=f"benchmark seed (shipped seeds: {synth.BENCHMARK_SEEDS})")
    parser.add_argument("--out", default="data/benchmark", help="output directory")
    args = parser.parse_args()
    bench = synth.make_benchmark(args.seed)
    synth.write_benchmark(bench, args.out)
    print(f"seed {args.seed}: {len(bench.corpus)} docs, "
          f"{len(bench.train_queries)} train / {len(bench.eval_queries)} eval queries "
          f"-> {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
