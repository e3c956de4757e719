"""Hard-negative mining against the current embedder.

Negatives come from a rank band of the embedder's own retrieval, with every
judged-relevant document filtered out, sampled without replacement from a
per-query seed so results are schedule-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .corpus import Qrels, Query, TrainingExample
from .encoder import EmbedderCheckpoint, embed
from .hashing import SplitMix64, fnv1a64, mix_seed
from .pipeline import Index, retrieve


@dataclass(frozen=True)
class MiningConfig:
    band_lo: int = 2
    band_hi: int = 50
    per_query: int = 4
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.band_lo <= self.band_hi):
            raise ValueError("require 1 <= band_lo <= band_hi")
        if self.per_query < 1:
            raise ValueError("per_query must be >= 1")


def _mine(
    embedder: EmbedderCheckpoint,
    index: Index,
    query_text: str,
    seed_key: str,
    relevant: set[str],
    cfg: MiningConfig,
) -> list[str]:
    ranked = retrieve(index, embed(embedder, query_text), cfg.band_hi)
    pool = [
        (rank, doc_id)
        for rank, (doc_id, _) in enumerate(ranked, start=1)
        if rank >= cfg.band_lo and doc_id not in relevant
    ]
    if len(pool) > cfg.per_query:
        rng = SplitMix64(mix_seed(cfg.seed, fnv1a64(seed_key.encode("utf-8"))))
        pool = rng.sample(pool, cfg.per_query)
    return [doc_id for _, doc_id in sorted(pool)]


def mine_hard_negatives(
    embedder: EmbedderCheckpoint,
    index: Index,
    query: Query,
    qrels: Qrels,
    cfg: MiningConfig,
) -> list[str]:
    """Hard negatives for one query, in ascending original rank order."""
    return _mine(embedder, index, query.text, query.id, qrels.relevant(query.id), cfg)


def attach_negatives(
    examples: list[TrainingExample],
    embedder: EmbedderCheckpoint,
    index: Index,
    qrels: Qrels,
    cfg: MiningConfig,
) -> list[TrainingExample]:
    """New examples with mined hard negatives; the inputs stay untouched.

    The judged-relevant filter always covers the example's own positive, even
    for weakly supervised examples with no qrels entry.
    """
    out = []
    for ex in examples:
        key = ex.query_id if ex.query_id is not None else f"ex:{ex.positive_id}"
        relevant = (qrels.relevant(ex.query_id) if ex.query_id else set()) | {
            ex.positive_id
        }
        negs = _mine(embedder, index, ex.query_text, key, relevant, cfg)
        out.append(replace(ex, hard_negative_ids=tuple(negs)))
    return out
