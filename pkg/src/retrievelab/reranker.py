"""Second-stage scorer: linear model over five query-document cross features.

Features: f1 embedding cosine, f2 character-bigram Jaccard, f3 query bigram
coverage, f4 normalized log-length gap, f5 constant bias. Trained with a
pairwise logistic loss on (positive, hard negative) pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .corpus import Corpus, CorpusStats, Document, Query, StageTag, TrainingExample
from .encoder import EmbedderCheckpoint, embed
from .hashing import SplitMix64, mix_seed

N_FEATURES = 5


@dataclass(frozen=True)
class RerankerCheckpoint:
    weights: np.ndarray  # (5,)
    stage: StageTag
    seed: int
    embedder_ref: str
    trained_examples: int = 0
    version: int = 1

    @property
    def component(self) -> str:
        return "reranker"

    # header uses dim x buckets to size the payload
    @property
    def dim(self) -> int:
        return N_FEATURES

    @property
    def buckets(self) -> int:
        return 1

    @property
    def ckpt_id(self) -> str:
        cached = getattr(self, "_ckpt_id", None)
        if cached is None:
            from .checkpoint import checkpoint_id

            cached = checkpoint_id(self)
            object.__setattr__(self, "_ckpt_id", cached)
        return cached


def init_reranker(seed: int, embedder_ref: str = "") -> RerankerCheckpoint:
    """Untrained baseline: only the cosine feature, so ordering degenerates
    to the embedder's ordering."""
    w = np.zeros(N_FEATURES, dtype=np.float32)
    w[0] = 1.0
    return RerankerCheckpoint(
        weights=w, stage=StageTag.Base, seed=seed, embedder_ref=embedder_ref
    )


@lru_cache(maxsize=262144)
def _bigrams(text: str) -> frozenset[str]:
    return frozenset(text[i : i + 2] for i in range(len(text) - 1))


def cross_features_text(
    query_text: str,
    doc_text: str,
    embedder: EmbedderCheckpoint,
    stats: CorpusStats,
    emb_cache: dict | None = None,
) -> np.ndarray:
    """The 5-vector of interaction features for a (query, document) pair."""

    def _emb(text: str) -> np.ndarray:
        if emb_cache is not None and text in emb_cache:
            return emb_cache[text]
        e = embed(embedder, text)
        if emb_cache is not None:
            emb_cache[text] = e
        return e

    f1 = float(_emb(query_text) @ _emb(doc_text))
    qb, db = _bigrams(query_text), _bigrams(doc_text)
    union = len(qb | db)
    f2 = len(qb & db) / union if union else 1.0
    if qb:
        f3 = len(qb & db) / len(qb)
    else:
        f3 = 1.0 if not db else 0.0
    denom = math.log1p(stats.max_doc_len)
    if denom > 0:
        gap = abs(math.log1p(len(query_text)) - math.log1p(len(doc_text)))
        f4 = min(gap / denom, 1.0)
    else:
        f4 = 0.0
    return np.array([f1, f2, f3, f4, 1.0], dtype=np.float64)


def cross_features(
    query: Query,
    doc: Document,
    embedder: EmbedderCheckpoint,
    stats: CorpusStats,
) -> np.ndarray:
    return cross_features_text(query.text, doc.text, embedder, stats)


def score(ckpt: RerankerCheckpoint, features: np.ndarray) -> float:
    return float(np.asarray(ckpt.weights, dtype=np.float64) @ features)


def pairwise_loss_and_grad(
    ckpt: RerankerCheckpoint,
    features_pos: np.ndarray,
    features_neg: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Pairwise logistic loss ln(1 + exp(-(s_pos - s_neg))), overflow-safe."""
    delta = np.asarray(features_pos, dtype=np.float64) - np.asarray(
        features_neg, dtype=np.float64
    )
    m = float(np.asarray(ckpt.weights, dtype=np.float64) @ delta)
    if m >= 0:
        loss = math.log1p(math.exp(-m))
        sig = 1.0 / (1.0 + math.exp(-m))  # sigma(m)
    else:
        loss = -m + math.log1p(math.exp(m))
        em = math.exp(m)
        sig = em / (1.0 + em)
    grad = -(1.0 - sig) * delta
    return loss, grad


@dataclass(frozen=True)
class RerankTrainConfig:
    learning_rate: float
    seed: int


def train_epoch(
    ckpt: RerankerCheckpoint,
    examples: list[TrainingExample],
    corpus: Corpus,
    embedder: EmbedderCheckpoint,
    config: RerankTrainConfig,
) -> RerankerCheckpoint:
    """One pass over all (positive, hard negative) pairs in seed-shuffled
    order, one gradient step per pair."""
    if not examples:
        raise ValueError("examples must be nonempty")
    for i, ex in enumerate(examples):
        if not ex.hard_negative_ids:
            raise ValueError(
                f"example {i} (query {ex.query_id or ex.query_text[:30]!r}) "
                "has no hard negatives; reranker training consumes mined pairs only"
            )
    pairs = [
        (i, neg) for i, ex in enumerate(examples) for neg in ex.hard_negative_ids
    ]
    SplitMix64(mix_seed(config.seed, len(pairs))).shuffle(pairs)
    stats = corpus.stats()
    emb_cache: dict = {}
    w = ckpt.weights.copy()
    working = replace(ckpt, weights=w)
    for i, neg in pairs:
        ex = examples[i]
        f_pos = cross_features_text(
            ex.query_text, corpus[ex.positive_id].text, embedder, stats, emb_cache
        )
        f_neg = cross_features_text(
            ex.query_text, corpus[neg].text, embedder, stats, emb_cache
        )
        _, grad = pairwise_loss_and_grad(working, f_pos, f_neg)
        w -= (config.learning_rate * grad).astype(w.dtype)
    return replace(
        ckpt, weights=w, trained_examples=ckpt.trained_examples + len(examples)
    )
