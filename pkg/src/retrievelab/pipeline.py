"""Brute-force vector index and the two-stage retrieve-then-rerank pipeline.

Retrieval is exact: full dot-product scan, descending score, ties broken by
ascending document id. Per-phase wall times use a monotonic clock; tests of
latency arithmetic inject timings instead of asserting clock values.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus, Query
from .encoder import EmbedderCheckpoint, embed
from .reranker import RerankerCheckpoint, cross_features_text


class PipelineError(ValueError):
    pass


@dataclass
class Index:
    doc_ids: list[str]
    matrix: np.ndarray  # (d, N), unit-norm or exactly zero columns
    embedder_id: str
    _id_rank: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        order = sorted(range(len(self.doc_ids)), key=lambda i: self.doc_ids[i])
        rank = np.empty(len(self.doc_ids), dtype=np.int64)
        for r, i in enumerate(order):
            rank[i] = r
        self._id_rank = rank

    def __len__(self) -> int:
        return len(self.doc_ids)


def build_index(embedder: EmbedderCheckpoint, corpus: Corpus) -> Index:
    if len(corpus) == 0:
        raise PipelineError("cannot build an index over an empty corpus")
    cols = [embed(embedder, doc.text) for doc in corpus]
    return Index(
        doc_ids=corpus.doc_ids,
        matrix=np.stack(cols, axis=1),
        embedder_id=embedder.ckpt_id,
    )


def retrieve(
    index: Index, query_embedding: np.ndarray, k: int
) -> list[tuple[str, float]]:
    """Exact top-min(k, N) by descending dot product, ties by ascending id."""
    if k < 1:
        raise PipelineError("k must be >= 1")
    scores = np.asarray(query_embedding, dtype=np.float64) @ index.matrix
    # +0.0 collapses -0.0/+0.0 so zero-score ties fall through to the id rank
    order = np.lexsort((index._id_rank, -scores + 0.0))[: min(k, len(index))]
    return [(index.doc_ids[i], float(scores[i])) for i in order]


@dataclass(frozen=True)
class PipelineManifest:
    """A mixed-stage composition: which checkpoints to run, and at what depths."""

    manifest_id: str
    embedder_path: str
    embedder_stage: int
    reranker_path: str
    reranker_stage: int
    k_embed: int = 60
    k_rerank: int = 10

    def __post_init__(self):
        if not (1 <= self.k_rerank <= self.k_embed):
            raise PipelineError(
                f"require 1 <= k_rerank <= k_embed, got {self.k_rerank}/{self.k_embed}"
            )

    def to_dict(self) -> dict:
        return {
            "manifest_id": self.manifest_id,
            "embedder_path": self.embedder_path,
            "embedder_stage": self.embedder_stage,
            "reranker_path": self.reranker_path,
            "reranker_stage": self.reranker_stage,
            "k_embed": self.k_embed,
            "k_rerank": self.k_rerank,
        }

    @staticmethod
    def from_dict(d: dict) -> "PipelineManifest":
        return PipelineManifest(**d)


@dataclass(frozen=True)
class RetrievalResult:
    query_id: str
    final: tuple[tuple[str, float], ...]  # (doc id, rerank score)
    candidates: tuple[tuple[str, float], ...]  # (doc id, cosine)
    embed_time: float
    retrieve_time: float
    rerank_time: float

    @property
    def total_time(self) -> float:
        return self.embed_time + self.retrieve_time + self.rerank_time


def _load_ckpt(path: str):
    from .checkpoint import load_checkpoint

    return load_checkpoint(path)


def run_pipeline(
    manifest: PipelineManifest,
    query: Query,
    corpus: Corpus,
    index: Index,
    embedder: EmbedderCheckpoint | None = None,
    reranker: RerankerCheckpoint | None = None,
) -> RetrievalResult:
    """Embed -> retrieve k_embed candidates -> rerank -> top k_rerank."""
    if embedder is None:
        embedder = _load_ckpt(manifest.embedder_path)
    if reranker is None:
        reranker = _load_ckpt(manifest.reranker_path)
    if index.embedder_id != embedder.ckpt_id:
        raise PipelineError(
            f"index was built with embedder {index.embedder_id}, "
            f"manifest uses {embedder.ckpt_id}"
        )
    t0 = time.perf_counter()
    q_emb = embed(embedder, query.text)
    t1 = time.perf_counter()
    candidates = retrieve(index, q_emb, manifest.k_embed)
    t2 = time.perf_counter()
    stats = corpus.stats()
    w = np.asarray(reranker.weights, dtype=np.float64)
    scored = []
    for doc_id, _ in candidates:
        feats = cross_features_text(query.text, corpus[doc_id].text, embedder, stats)
        scored.append((doc_id, float(w @ feats)))
    scored.sort(key=lambda t: (-t[1], t[0]))
    t3 = time.perf_counter()
    return RetrievalResult(
        query_id=query.id,
        final=tuple(scored[: manifest.k_rerank]),
        candidates=tuple(candidates),
        embed_time=t1 - t0,
        retrieve_time=t2 - t1,
        rerank_time=t3 - t2,
    )


@dataclass(frozen=True)
class LatencySummary:
    query_count: int
    candidate_total_s: float
    baseline_total_s: float
    delta_s: float
    per_query_delta_s: float
    relative_increase: float


def latency_report(
    results: list[RetrievalResult], baseline: list[RetrievalResult]
) -> LatencySummary:
    """Total/delta/per-query/relative latency of a candidate system vs a
    baseline over the same query set."""
    ids_a = {r.query_id for r in results}
    ids_b = {r.query_id for r in baseline}
    if ids_a != ids_b:
        raise PipelineError(
            f"mismatched query sets: {sorted(ids_a ^ ids_b)[:5]} differ"
        )
    total_a = sum(r.total_time for r in results)
    total_b = sum(r.total_time for r in baseline)
    delta = total_a - total_b
    n = len(ids_a)
    return LatencySummary(
        query_count=n,
        candidate_total_s=total_a,
        baseline_total_s=total_b,
        delta_s=delta,
        per_query_delta_s=delta / n if n else 0.0,
        relative_increase=delta / total_b if total_b else 0.0,
    )


def write_trec_run(
    results: list[RetrievalResult], path: str | Path, tag: str = "retrievelab"
) -> None:
    """TREC run format: query_id Q0 doc_id rank score tag."""
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            for rank, (doc_id, s) in enumerate(r.final, start=1):
                fh.write(f"{r.query_id} Q0 {doc_id} {rank} {s:.6f} {tag}\n")


def read_trec_run(path: str | Path) -> dict[str, list[str]]:
    """Parse a TREC run file into query id -> ranked doc ids (score desc,
    ties by ascending doc id)."""
    per_query: dict[str, list[tuple[float, str]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise PipelineError(f"{path}:{lineno}: expected 6 columns")
            qid, _, did, _, score_s, _ = parts
            per_query.setdefault(qid, []).append((float(score_s), did))
    return {
        qid: [did for _, did in sorted(rows, key=lambda t: (-t[0], t[1]))]
        for qid, rows in per_query.items()
    }
