"""Command-line entry points for the full workbench workflow."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import abtest, encoder, reranker, synth
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import (
    StageTag,
    filter_stage3_queries,
    generate_weak_pairs,
    load_corpus,
    load_qrels,
    load_queries,
    save_corpus,
)
from .curriculum import (
    CheckpointRegistry,
    CurriculumConfig,
    default_stage_plans,
    run_stage,
)
from .evalsel import (
    SelectionConfig,
    evaluate_run,
    select_components,
    sweep_recall_budget,
    write_curve_csv,
)
from .hashing import mix_seed
from .miner import MiningConfig, mine_hard_negatives
from .pipeline import PipelineManifest, build_index, run_pipeline, write_trec_run


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="deterministic seed")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retrievelab", description="two-stage retrieval workbench"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalize a corpus file")
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    _add_seed(p)

    p = sub.add_parser("gen-weak", help="generate weak supervision pairs")
    p.add_argument("--docs", required=True)
    p.add_argument("--count", type=int, default=2048)
    p.add_argument("--out", required=True)
    _add_seed(p)

    p = sub.add_parser("train", help="train one curriculum stage")
    p.add_argument("--stage", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--component", choices=("embedder", "reranker"), required=True)
    p.add_argument("--docs", required=True)
    p.add_argument("--queries")
    p.add_argument("--qrels")
    p.add_argument("--prev", required=True, help="previous-stage checkpoint")
    p.add_argument("--embedder", help="same-stage embedder (reranker only)")
    p.add_argument("--out", required=True)
    _add_seed(p)

    p = sub.add_parser("init", help="write an untrained Base checkpoint")
    p.add_argument("--component", choices=("embedder", "reranker"), required=True)
    p.add_argument("--embedder", help="embedder checkpoint ref (reranker only)")
    p.add_argument("--out", required=True)
    _add_seed(p)

    p = sub.add_parser("mine", help="mine hard negatives for queries")
    p.add_argument("--docs", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--embedder", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--band-lo", type=int, default=2)
    p.add_argument("--band-hi", type=int, default=50)
    p.add_argument("--per-query", type=int, default=4)
    _add_seed(p)

    p = sub.add_parser("eval", help="evaluate an embedder (and optional reranker)")
    p.add_argument("--docs", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--embedder", required=True)
    p.add_argument("--reranker")
    p.add_argument("--run", help="evaluate an external TREC run file instead")
    _add_seed(p)

    p = sub.add_parser("sweep", help="recall as a function of retrieval budget")
    p.add_argument("--docs", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--embedder", required=True)
    p.add_argument("--ks", default="20,60,100")
    p.add_argument("--out", help="plot-ready CSV path")
    _add_seed(p)

    p = sub.add_parser("select", help="mixed-stage component selection")
    p.add_argument("--registry", required=True)
    p.add_argument("--k-select", type=int, default=60)
    p.add_argument("--out", required=True)
    _add_seed(p)

    p = sub.add_parser("run", help="run the two-stage pipeline over queries")
    p.add_argument("--manifest", required=True)
    p.add_argument("--docs", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k-embed", type=int)
    p.add_argument("--k-rerank", type=int)
    p.add_argument("--out", help="TREC run output path")
    _add_seed(p)

    p = sub.add_parser("ab-build", help="build a blinded A/B session")
    p.add_argument("--manifest-a", required=True)
    p.add_argument("--manifest-b", required=True)
    p.add_argument("--docs", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--session", required=True, help="journal output path")
    p.add_argument("--session-id", default="session")
    _add_seed(p)

    p = sub.add_parser("ab-judge", help="judge a session in the terminal")
    p.add_argument("--session", required=True)
    _add_seed(p)

    p = sub.add_parser("ab-report", help="aggregate a judged session")
    p.add_argument("--session", required=True)
    p.add_argument("--partial", action="store_true")
    _add_seed(p)

    p = sub.add_parser("serve", help="run the HTTP gateway")
    p.add_argument("--address", default=None, help="host:port")
    p.add_argument("--data-dir", default=None)
    _add_seed(p)

    p = sub.add_parser("make-benchmark", help="write the synthetic benchmark")
    p.add_argument("--out", required=True)
    _add_seed(p)

    return parser


def _cmd_ingest(args) -> int:
    corpus = load_corpus(args.docs)
    save_corpus(corpus, args.out)
    print(f"ingested {len(corpus)} documents -> {args.out}")
    return 0


def _cmd_gen_weak(args) -> int:
    corpus = load_corpus(args.docs)
    pairs = generate_weak_pairs(corpus, args.count, args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        for ex in pairs:
            fh.write(
                json.dumps(
                    {"query_text": ex.query_text, "positive_id": ex.positive_id},
                    ensure_ascii=False,
                )
                + "\n"
            )
    print(f"wrote {len(pairs)} weak pairs -> {args.out}")
    return 0


def _cmd_init(args) -> int:
    if args.component == "embedder":
        ckpt = encoder.init_embedder(args.seed)
    else:
        ckpt = reranker.init_reranker(args.seed, args.embedder or "")
    save_checkpoint(ckpt, args.out)
    print(f"wrote Base {args.component} checkpoint -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    corpus = load_corpus(args.docs)
    queries = load_queries(args.queries) if args.queries else None
    qrels = load_qrels(args.qrels) if args.qrels else None
    stage = StageTag(args.stage)
    plan = default_stage_plans()[stage]
    if plan.data_source != "weak_pairs" and (queries is None or qrels is None):
        print("error: --queries and --qrels required for stages 2 and 3", file=sys.stderr)
        return 1
    prev = load_checkpoint(args.prev)
    emb = None
    if args.component == "reranker":
        if not args.embedder:
            print("error: --embedder required for reranker training", file=sys.stderr)
            return 1
        emb = load_checkpoint(args.embedder)
    from .corpus import QuerySet, Qrels

    ckpt = run_stage(
        plan,
        args.component,
        prev,
        corpus,
        queries or QuerySet([]),
        qrels or Qrels(),
        args.seed,
        embedder=emb,
    )
    save_checkpoint(ckpt, args.out)
    print(f"trained {args.component} {stage.name} -> {args.out}")
    return 0


def _cmd_mine(args) -> int:
    corpus = load_corpus(args.docs)
    queries = load_queries(args.queries)
    qrels = load_qrels(args.qrels)
    emb = load_checkpoint(args.embedder)
    index = build_index(emb, corpus)
    cfg = MiningConfig(args.band_lo, args.band_hi, args.per_query, args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        for q in queries:
            negs = mine_hard_negatives(emb, index, q, qrels, cfg)
            fh.write(json.dumps({"query_id": q.id, "hard_negative_ids": negs}) + "\n")
    print(f"mined negatives for {len(queries)} queries -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    qrels = load_qrels(args.qrels)
    if args.run:
        from .pipeline import read_trec_run

        run = read_trec_run(args.run)
    else:
        corpus = load_corpus(args.docs)
        queries = load_queries(args.queries)
        emb = load_checkpoint(args.embedder)
        index = build_index(emb, corpus)
        if args.reranker:
            rr = load_checkpoint(args.reranker)
            manifest = PipelineManifest(
                manifest_id="eval",
                embedder_path=args.embedder,
                embedder_stage=int(emb.stage),
                reranker_path=args.reranker,
                reranker_stage=int(rr.stage),
                k_embed=60,
                k_rerank=60,
            )
            run = {}
            for q in queries:
                res = run_pipeline(manifest, q, corpus, index, emb, rr)
                run[q.id] = [d for d, _ in res.final]
        else:
            from .encoder import embed
            from .pipeline import retrieve

            run = {
                q.id: [d for d, _ in retrieve(index, embed(emb, q.text), 100)]
                for q in queries
            }
    values, used, excluded = evaluate_run(run, qrels)
    for name, v in sorted(values.items()):
        print(f"{name}\t{v:.4f}")
    print(f"queries\t{used}\texcluded\t{excluded}")
    return 0


def _cmd_sweep(args) -> int:
    corpus = load_corpus(args.docs)
    queries = load_queries(args.queries)
    qrels = load_qrels(args.qrels)
    emb = load_checkpoint(args.embedder)
    index = build_index(emb, corpus)
    ks = [int(k) for k in args.ks.split(",")]
    curve = sweep_recall_budget(emb, index, queries, qrels, ks)
    for k, r in curve.points:
        print(f"{curve.stage.name}\tK={k}\trecall={r:.4f}")
    if args.out:
        write_curve_csv([curve], args.out)
    return 0


def _cmd_select(args) -> int:
    registry = CheckpointRegistry.load(args.registry)
    manifest = select_components(registry, SelectionConfig(k_select=args.k_select))
    Path(args.out).write_text(json.dumps(manifest.to_dict(), indent=2))
    print(
        f"selected embedder stage {manifest.embedder_stage}, "
        f"reranker stage {manifest.reranker_stage} -> {args.out}"
    )
    return 0


def _cmd_run(args) -> int:
    manifest = PipelineManifest.from_dict(json.loads(Path(args.manifest).read_text()))
    if args.k_embed or args.k_rerank:
        d = manifest.to_dict()
        if args.k_embed:
            d["k_embed"] = args.k_embed
        if args.k_rerank:
            d["k_rerank"] = args.k_rerank
        manifest = PipelineManifest.from_dict(d)
    corpus = load_corpus(args.docs)
    queries = load_queries(args.queries)
    emb = load_checkpoint(manifest.embedder_path)
    rr = load_checkpoint(manifest.reranker_path)
    index = build_index(emb, corpus)
    results = [run_pipeline(manifest, q, corpus, index, emb, rr) for q in queries]
    if args.out:
        write_trec_run(results, args.out, tag=manifest.manifest_id)
        print(f"wrote run -> {args.out}")
    else:
        for r in results:
            for rank, (doc_id, s) in enumerate(r.final, start=1):
                print(f"{r.query_id} Q0 {doc_id} {rank} {s:.6f} {manifest.manifest_id}")
    return 0


def _cmd_ab_build(args) -> int:
    manifest_a = PipelineManifest.from_dict(json.loads(Path(args.manifest_a).read_text()))
    manifest_b = PipelineManifest.from_dict(json.loads(Path(args.manifest_b).read_text()))
    corpus = load_corpus(args.docs)
    queries = load_queries(args.queries)
    emb_a = load_checkpoint(manifest_a.embedder_path)
    emb_b = load_checkpoint(manifest_b.embedder_path)
    index_a = build_index(emb_a, corpus)
    index_b = index_a if emb_b.ckpt_id == emb_a.ckpt_id else build_index(emb_b, corpus)
    session = abtest.build_session(
        manifest_a,
        manifest_b,
        queries,
        corpus,
        index_a,
        index_b,
        args.seed,
        session_id=args.session_id,
        journal_path=args.session,
    )
    judgeable = len(session.judgeable_pairs())
    print(
        f"built session {session.session_id}: {len(session.pairs)} pairs, "
        f"{judgeable} judgeable -> {args.session}"
    )
    return 0


def _cmd_ab_judge(args) -> int:
    session = abtest.load_session(args.session)
    while True:
        pair = session.next_unjudged()
        if pair is None:
            break
        print(f"\n=== pair {pair.pair_id} :: query: {pair.query_text}")
        for side, snippets in (("LEFT", pair.left), ("RIGHT", pair.right)):
            print(f"--- {side}")
            for s in snippets:
                print(f"  [{s.doc_id}] {s.text[:120]}")
        choice = None
        while choice not in ("l", "r", "t"):
            print("judge [l]eft / [r]ight / [t]ie: ", end="", flush=True)
            line = sys.stdin.readline()
            if not line:
                print("\ninput closed; stopping")
                return 0
            choice = line.strip().lower()[:1]
        abtest.record_judgment(
            session, pair.pair_id, {"l": "left", "r": "right", "t": "tie"}[choice]
        )
    print("session fully judged")
    return 0


def _cmd_ab_report(args) -> int:
    session = abtest.load_session(args.session)
    report = abtest.aggregate(session, partial=args.partial)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    address = args.address or os.environ.get("RETRIEVELAB_ADDR", "127.0.0.1:8970")
    data_dir = args.data_dir or os.environ.get("RETRIEVELAB_DATA_DIR", ".")
    host, _, port = address.rpartition(":")
    config = ServiceConfig(
        listen_host=host or "127.0.0.1",
        listen_port=int(port),
        data_dir=data_dir,
    )
    app = create_app(config)
    uvicorn.run(app, host=config.listen_host, port=config.listen_port, log_level="warning")
    return 0


def _cmd_make_benchmark(args) -> int:
    bench = synth.make_benchmark(args.seed or synth.BENCHMARK_SEEDS[0])
    synth.write_benchmark(bench, args.out)
    print(
        f"benchmark: {len(bench.corpus)} docs, {len(bench.train_queries)} train / "
        f"{len(bench.eval_queries)} eval queries -> {args.out}"
    )
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "gen-weak": _cmd_gen_weak,
    "init": _cmd_init,
    "train": _cmd_train,
    "mine": _cmd_mine,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "select": _cmd_select,
    "run": _cmd_run,
    "ab-build": _cmd_ab_build,
    "ab-judge": _cmd_ab_judge,
    "ab-report": _cmd_ab_report,
    "serve": _cmd_serve,
    "make-benchmark": _cmd_make_benchmark,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
