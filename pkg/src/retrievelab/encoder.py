"""Desk-scale dense retriever: hashed character n-grams -> linear projection.

The embedder is a d x F linear map over hashed character {2,3}-gram counts,
followed by L2 normalization. Training uses a temperature-scaled softmax over
cosine similarities with exact analytic gradients, which keeps finite
difference checks and bit-level determinism tractable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .corpus import Corpus, StageTag, TrainingExample
from .hashing import fnv1a64, mix_seed, splitmix64_floats

DEFAULT_DIM = 64
DEFAULT_BUCKETS = 1 << 18
DEFAULT_TAU = 0.1


@dataclass(frozen=True)
class SparseFeature:
    """L2-normalized hashed n-gram counts: sorted bucket indices + weights."""

    indices: np.ndarray  # int64, strictly increasing
    values: np.ndarray  # float64, unit L2 norm unless empty

    def __len__(self) -> int:
        return len(self.indices)


_EMPTY_FEATURE = SparseFeature(
    np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
)


@lru_cache(maxsize=262144)
def featurize(text: str, buckets: int = DEFAULT_BUCKETS) -> SparseFeature:
    """Hashed character {2,3}-gram counts, L2-normalized.

    Expects text already normalized per the corpus rules. Empty or
    single-character text has no n-grams and yields the empty feature.
    """
    counts: dict[int, int] = {}
    for n in (2, 3):
        for i in range(len(text) - n + 1):
            b = fnv1a64(text[i : i + n].encode("utf-8")) % buckets
            counts[b] = counts.get(b, 0) + 1
    if not counts:
        return _EMPTY_FEATURE
    idx = np.array(sorted(counts), dtype=np.int64)
    vals = np.array([counts[i] for i in idx], dtype=np.float64)
    vals /= math.sqrt(float(vals @ vals))
    idx.setflags(write=False)
    vals.setflags(write=False)
    return SparseFeature(idx, vals)


@dataclass(frozen=True)
class EmbedderCheckpoint:
    dim: int
    buckets: int
    weights: np.ndarray  # (dim, buckets); float32 canonically, float64 in tests
    stage: StageTag
    seed: int
    trained_examples: int = 0
    version: int = 1

    @property
    def component(self) -> str:
        return "embedder"

    @property
    def ckpt_id(self) -> str:
        # memoized; weights are immutable by convention once wrapped
        cached = getattr(self, "_ckpt_id", None)
        if cached is None:
            from .checkpoint import checkpoint_id

            cached = checkpoint_id(self)
            object.__setattr__(self, "_ckpt_id", cached)
        return cached


def init_embedder(
    seed: int, dim: int = DEFAULT_DIM, buckets: int = DEFAULT_BUCKETS
) -> EmbedderCheckpoint:
    """Untrained Base checkpoint: uniform init in +-sqrt(6/(F+d)), SplitMix64."""
    scale = math.sqrt(6.0 / (buckets + dim))
    u = splitmix64_floats(mix_seed(seed, dim, buckets), dim * buckets)
    w = ((u * 2.0 - 1.0) * scale).astype(np.float32).reshape(dim, buckets)
    return EmbedderCheckpoint(
        dim=dim, buckets=buckets, weights=w, stage=StageTag.Base, seed=seed
    )


def _project(weights: np.ndarray, feat: SparseFeature) -> tuple[np.ndarray, float]:
    """Unnormalized projection W x and its L2 norm, accumulated in float64."""
    if len(feat) == 0:
        return np.zeros(weights.shape[0], dtype=np.float64), 0.0
    u = weights[:, feat.indices].astype(np.float64) @ feat.values
    return u, float(np.linalg.norm(u))


def embed(ckpt: EmbedderCheckpoint, text: str) -> np.ndarray:
    """Unit-norm embedding of text; exact zero vector for empty feature input."""
    u, n = _project(ckpt.weights, featurize(text, ckpt.buckets))
    if n == 0.0:
        return np.zeros(ckpt.dim, dtype=np.float64)
    return u / n


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(a @ b)


def contrastive_loss_from_scores(scores: np.ndarray, tau: float) -> float:
    """InfoNCE over cosine scores; scores[0] is the positive. Shifted LSE."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    z = np.asarray(scores, dtype=np.float64) / tau
    m = float(np.max(z))
    return m + math.log(float(np.sum(np.exp(z - m)))) - float(z[0])


def _embed_cached(
    weights: np.ndarray, buckets: int, text: str, cache: dict | None
) -> tuple[SparseFeature, np.ndarray, float]:
    if cache is not None and text in cache:
        return cache[text]
    feat = featurize(text, buckets)
    u, n = _project(weights, feat)
    e = u / n if n > 0.0 else u
    entry = (feat, e, n)
    if cache is not None:
        cache[text] = entry
    return entry


def _example_loss_grad(
    ckpt: EmbedderCheckpoint,
    query_text: str,
    candidate_texts: list[str],
    tau: float,
    cache: dict | None = None,
) -> tuple[float, dict[int, np.ndarray]]:
    """Loss and sparse gradient for one example; candidate 0 is the positive.

    Gradient is returned as a map bucket-index -> d-vector (float64), the
    exact analytic derivative of the loss w.r.t. the touched weight columns.
    Zero embeddings (empty text) contribute score 0 and no gradient.
    """
    W = ckpt.weights
    qf, eq, nq = _embed_cached(W, ckpt.buckets, query_text, cache)
    cands = [_embed_cached(W, ckpt.buckets, t, cache) for t in candidate_texts]
    scores = np.array([float(eq @ e) for _, e, _ in cands], dtype=np.float64)
    loss = contrastive_loss_from_scores(scores, tau)

    z = scores / tau
    p = np.exp(z - np.max(z))
    p /= p.sum()
    g = p.copy()
    g[0] -= 1.0
    g /= tau  # dL/ds_c

    grad: dict[int, np.ndarray] = {}

    def scatter(vec: np.ndarray, feat: SparseFeature) -> None:
        for j, x in zip(feat.indices, feat.values):
            col = int(j)
            acc = grad.get(col)
            if acc is None:
                grad[col] = vec * x
            else:
                acc += vec * x

    if nq > 0.0:
        v = np.zeros_like(eq)
        for gc, (_, ec, ncn) in zip(g, cands):
            if ncn > 0.0:
                v += gc * ec
        dq = (v - eq * float(eq @ v)) / nq
        scatter(dq, qf)
    for gc, (cf, ec, ncn) in zip(g, cands):
        if ncn > 0.0 and nq > 0.0:
            dc = gc * (eq - ec * float(ec @ eq)) / ncn
            scatter(dc, cf)
    return loss, grad


def contrastive_loss_and_grad(
    ckpt: EmbedderCheckpoint,
    query_text: str,
    positive_text: str,
    negative_texts: list[str],
    tau: float = DEFAULT_TAU,
) -> tuple[float, dict[int, np.ndarray]]:
    """InfoNCE loss over {positive} + negatives and its analytic gradient."""
    return _example_loss_grad(ckpt, query_text, [positive_text, *negative_texts], tau)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    seed: int
    tau: float = DEFAULT_TAU
    batch_size: int = 32


def _batch_step(
    W: np.ndarray,
    buckets: int,
    dim: int,
    query_texts: list[str],
    candidate_lists: list[list[str]],
    tau: float,
    learning_rate: float,
) -> None:
    """One in-place GD step on the batch-mean InfoNCE gradient.

    Same analytic gradient as ``contrastive_loss_and_grad``; candidate-side
    contributions are accumulated per unique text (they are linear in the
    query embedding), so shared in-batch candidates cost one outer product.
    """
    texts: dict[str, int] = {}
    for t in query_texts:
        texts.setdefault(t, len(texts))
    for cands in candidate_lists:
        for t in cands:
            texts.setdefault(t, len(texts))
    keys = list(texts)
    feats = [featurize(t, buckets) for t in keys]
    cols = sorted({int(c) for f in feats for c in f.indices})
    col_local = {c: i for i, c in enumerate(cols)}
    local_idx = [
        np.array([col_local[int(c)] for c in f.indices], dtype=np.int64) for f in feats
    ]
    embs = np.zeros((len(keys), dim), dtype=np.float64)
    norms = np.zeros(len(keys), dtype=np.float64)
    for i, f in enumerate(feats):
        u, n = _project(W, f)
        norms[i] = n
        embs[i] = u / n if n > 0.0 else u

    G = np.zeros((len(cols), dim), dtype=np.float64)  # local col -> d-vector
    S = np.zeros((len(keys), dim), dtype=np.float64)  # per text: sum_ex g * e_q
    for q_text, cands in zip(query_texts, candidate_lists):
        qi = texts[q_text]
        rows = np.array([texts[t] for t in cands], dtype=np.int64)
        eq = embs[qi]
        E = embs[rows]
        scores = E @ eq
        z = scores / tau
        g = np.exp(z - np.max(z))
        g /= g.sum()
        g[0] -= 1.0
        g /= tau  # dL/ds_c
        np.add.at(S, rows, g[:, None] * eq[None, :])
        if norms[qi] > 0.0:
            v = g @ E
            dq = (v - eq * float(eq @ v)) / norms[qi]
            G[local_idx[qi]] += feats[qi].values[:, None] * dq[None, :]

    for i, f in enumerate(feats):
        if norms[i] == 0.0 or len(f) == 0:
            continue
        s = S[i]
        dc = (s - embs[i] * float(embs[i] @ s)) / norms[i]
        G[local_idx[i]] += f.values[:, None] * dc[None, :]

    step = learning_rate / len(query_texts)
    W[:, cols] -= (step * G.T).astype(W.dtype)


def train_epoch(
    ckpt: EmbedderCheckpoint,
    examples: list[TrainingExample],
    corpus: Corpus,
    config: TrainConfig,
) -> EmbedderCheckpoint:
    """One epoch of minibatch gradient descent with in-batch negatives.

    Candidates per example are its positive, its hard negatives, and the
    positives of the other in-batch examples. One plain GD step per minibatch
    (batch-mean gradient). Deterministic in (ckpt, examples, config.seed).
    """
    if not examples:
        raise ValueError("examples must be nonempty")
    if config.learning_rate < 0:
        raise ValueError("learning_rate must be >= 0")
    from .hashing import SplitMix64

    order = list(range(len(examples)))
    SplitMix64(mix_seed(config.seed, len(examples))).shuffle(order)
    W = ckpt.weights.copy()
    bs = config.batch_size
    for start in range(0, len(order), bs):
        batch = [examples[i] for i in order[start : start + bs]]
        pos_texts = [corpus[ex.positive_id].text for ex in batch]
        query_texts = [ex.query_text for ex in batch]
        candidate_lists = [
            [pos_texts[i]]
            + [corpus[n].text for n in ex.hard_negative_ids]
            + [t for j, t in enumerate(pos_texts) if j != i]
            for i, ex in enumerate(batch)
        ]
        _batch_step(
            W,
            ckpt.buckets,
            ckpt.dim,
            query_texts,
            candidate_lists,
            config.tau,
            config.learning_rate,
        )
    return replace(
        ckpt, weights=W, trained_examples=ckpt.trained_examples + len(examples)
    )
