"""Ranking metrics, recall-budget sweeps, and mixed-stage component selection.

Metrics use binary relevance. Queries with empty relevant sets are excluded
from means upstream; the single-query functions reject them outright.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Qrels, QuerySet, StageTag
from .encoder import EmbedderCheckpoint, embed
from .pipeline import Index, PipelineManifest, retrieve


class EvalError(ValueError):
    pass


def recall_at_k(ranked: Sequence[str], relevant: set[str], k: int) -> float:
    if not relevant:
        raise EvalError("relevant set is empty; exclude the query upstream")
    if k < 1:
        raise EvalError("k must be >= 1")
    hits = sum(1 for d in ranked[:k] if d in relevant)
    return hits / len(relevant)


def reciprocal_rank(ranked: Sequence[str], relevant: set[str]) -> float:
    if not relevant:
        raise EvalError("relevant set is empty; exclude the query upstream")
    for i, d in enumerate(ranked, start=1):
        if d in relevant:
            return 1.0 / i
    return 0.0


def ndcg_at(ranked: Sequence[str], relevant: set[str], cutoff: int = 10) -> float:
    if not relevant:
        raise EvalError("relevant set is empty; exclude the query upstream")
    dcg = sum(
        1.0 / math.log2(i + 1)
        for i, d in enumerate(ranked[:cutoff], start=1)
        if d in relevant
    )
    ideal_hits = min(len(relevant), cutoff)
    idcg = sum(1.0 / math.log2(i + 1) for i in range(1, ideal_hits + 1))
    return dcg / idcg


def mrr(per_query: Iterable[tuple[Sequence[str], set[str]]]) -> float:
    vals = [reciprocal_rank(r, rel) for r, rel in per_query]
    if not vals:
        raise EvalError("no queries to average")
    return sum(vals) / len(vals)


def mean_ndcg(
    per_query: Iterable[tuple[Sequence[str], set[str]]], cutoff: int = 10
) -> float:
    vals = [ndcg_at(r, rel, cutoff) for r, rel in per_query]
    if not vals:
        raise EvalError("no queries to average")
    return sum(vals) / len(vals)


@dataclass(frozen=True)
class MetricReport:
    component: str
    stage: StageTag
    values: dict[str, float]
    query_count: int
    excluded: int = 0
    dataset_id: str = ""


@dataclass(frozen=True)
class RecallBudgetCurve:
    stage: StageTag
    points: tuple[tuple[int, float], ...]  # (K, mean recall), K strictly increasing


def evaluate_run(
    run: dict[str, Sequence[str]],
    qrels: Qrels,
    ks: Sequence[int] = (20, 60, 100),
    cutoff: int = 10,
) -> tuple[dict[str, float], int, int]:
    """Mean recall@K / MRR / nDCG over the judged queries of a run.

    Returns (metric map, query count used, excluded count). Queries with no
    judged relevant document are excluded from all means.
    """
    pairs = []
    excluded = 0
    for qid, ranked in run.items():
        rel = qrels.relevant(qid)
        if rel:
            pairs.append((ranked, rel))
        else:
            excluded += 1
    if not pairs:
        raise EvalError("no judged queries in run")
    values = {f"recall@{k}": sum(recall_at_k(r, rel, k) for r, rel in pairs) / len(pairs)
              for k in ks}
    values["mrr"] = mrr(pairs)
    values[f"ndcg@{cutoff}"] = mean_ndcg(pairs, cutoff)
    return values, len(pairs), excluded


def sweep_recall_budget(
    embedder: EmbedderCheckpoint,
    index: Index,
    queries: QuerySet,
    qrels: Qrels,
    ks: Sequence[int],
) -> RecallBudgetCurve:
    """Mean recall at each budget K. One retrieve per query at max(ks),
    prefix-truncated per K."""
    ks = list(ks)
    if any(b <= a for a, b in zip(ks, ks[1:])) or not ks:
        raise EvalError("ks must be nonempty and strictly increasing")
    per_k = {k: [] for k in ks}
    for q in queries:
        rel = qrels.relevant(q.id)
        if not rel:
            continue
        ranked = [d for d, _ in retrieve(index, embed(embedder, q.text), max(ks))]
        for k in ks:
            per_k[k].append(recall_at_k(ranked, rel, k))
    if not per_k[ks[0]]:
        raise EvalError("no judged queries to sweep")
    points = tuple((k, sum(v) / len(v)) for k, v in per_k.items())
    return RecallBudgetCurve(stage=embedder.stage, points=points)


def write_curve_csv(curves: Iterable[RecallBudgetCurve], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["stage", "K", "recall"])
        for curve in curves:
            for k, r in curve.points:
                w.writerow([curve.stage.name, k, f"{r:.6f}"])


@dataclass(frozen=True)
class SelectionConfig:
    k_select: int = 60
    reranker_metric: str = "mrr"
    reranker_tiebreak: str = "ndcg@10"
    k_embed: int = 60
    k_rerank: int = 10


def select_components(registry, config: SelectionConfig = SelectionConfig()) -> PipelineManifest:
    """Component-wise mixed-stage selection over a complete registry.

    Embedder: argmax Recall@k_select. Reranker: argmax MRR, nDCG tiebreak.
    Remaining ties go to the earliest stage.
    """
    missing = registry.missing_entries()
    if missing:
        raise EvalError(
            "registry incomplete, missing: "
            + ", ".join(f"{c}/{s.name}" for c, s in missing)
        )
    emb_metric = f"recall@{config.k_select}"
    best_emb = None
    for stage in StageTag:
        entry = registry.get("embedder", stage)
        v = entry.metrics[emb_metric]
        if best_emb is None or v > best_emb[0]:
            best_emb = (v, entry)
    best_rr = None
    for stage in StageTag:
        entry = registry.get("reranker", stage)
        key = (entry.metrics[config.reranker_metric],
               entry.metrics[config.reranker_tiebreak])
        if best_rr is None or key > best_rr[0]:
            best_rr = (key, entry)
    emb_entry, rr_entry = best_emb[1], best_rr[1]
    return PipelineManifest(
        manifest_id=f"{emb_entry.stage.name.lower()}-emb_{rr_entry.stage.name.lower()}-rr",
        embedder_path=emb_entry.path,
        embedder_stage=int(emb_entry.stage),
        reranker_path=rr_entry.path,
        reranker_stage=int(rr_entry.stage),
        k_embed=config.k_embed,
        k_rerank=config.k_rerank,
    )
