"""Seeded synthetic retrieval benchmark.

Documents are bags of topic-structured vocabulary words; queries sample a few
words from one target document, replacing some with fixed query-side aliases
so an untrained projection has headroom left for training to close. The whole
benchmark is a pure function of its seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .corpus import (
    Corpus,
    Document,
    Qrels,
    Query,
    QuerySet,
    save_corpus,
    save_qrels,
    save_queries,
)
from .hashing import SplitMix64, mix_seed

BENCHMARK_SEEDS = (101, 202, 303)

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class SynthBenchmark:
    corpus: Corpus
    train_queries: QuerySet
    eval_queries: QuerySet
    qrels: Qrels


def _word(rng: SplitMix64, lo: int = 4, hi: int = 7) -> str:
    n = lo + rng.next_below(hi - lo + 1)
    return "".join(_LETTERS[rng.next_below(26)] for _ in range(n))


def make_benchmark(
    seed: int,
    n_docs: int = 5000,
    n_queries: int = 500,
    n_eval: int = 150,
    vocab_size: int = 400,
    n_topics: int = 40,
    words_per_topic: int = 80,
    words_per_doc: int = 25,
    words_per_query: int = 5,
    alias_prob: float = 0.5,
    n_noise: int = 150,
) -> SynthBenchmark:
    rng = SplitMix64(mix_seed(seed, 0x5B))
    vocab = []
    seen: set[str] = set()
    while len(vocab) < vocab_size:
        w = _word(rng)
        if w not in seen:
            seen.add(w)
            vocab.append(w)
    # query-side alias: same stem, different tail, so the untrained model
    # gets partial n-gram overlap and training can learn the rest
    aliases = {}
    for w in vocab:
        while True:
            a = w[:-2] + _LETTERS[rng.next_below(26)] + _LETTERS[rng.next_below(26)]
            if a != w and a not in seen:
                seen.add(a)
                aliases[w] = a
                break

    topics = [
        [vocab[rng.next_below(vocab_size)] for _ in range(words_per_topic)]
        for _ in range(n_topics)
    ]

    docs = []
    doc_words: list[list[str]] = []
    for i in range(n_docs):
        topic = topics[rng.next_below(n_topics)]
        words = rng.sample(topic, words_per_doc)
        doc_words.append(words)
        docs.append(Document(f"d{i:05d}", " ".join(words)))
    corpus = Corpus(docs)

    queries = []
    judgments: dict[str, set[str]] = {}
    for i in range(n_queries):
        target = rng.next_below(n_docs)
        picked = rng.sample(doc_words[target], min(words_per_query, words_per_doc))
        terms = [
            aliases[w] if rng.next_float() < alias_prob else w for w in picked
        ]
        qid = f"q{i:04d}"
        queries.append(Query(qid, " ".join(terms)))
        judgments[qid] = {f"d{target:05d}"}
    # low-quality training noise: too-short queries judged against a random
    # document; the Stage 3 query filter screens these out
    noise = []
    for i in range(n_noise):
        qid = f"qn{i:04d}"
        text = "".join(
            _LETTERS[rng.next_below(26)] for _ in range(2 + rng.next_below(2))
        )
        noise.append(Query(qid, text))
        judgments[qid] = {f"d{rng.next_below(n_docs):05d}"}

    qrels = Qrels(judgments)
    n_train = n_queries - n_eval
    return SynthBenchmark(
        corpus=corpus,
        train_queries=QuerySet(queries[:n_train] + noise),
        eval_queries=QuerySet(queries[n_train:]),
        qrels=qrels,
    )


def write_benchmark(bench: SynthBenchmark, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_corpus(bench.corpus, out / "corpus.jsonl")
    save_queries(bench.train_queries, out / "queries_train.jsonl")
    save_queries(bench.eval_queries, out / "queries_eval.jsonl")
    save_qrels(bench.qrels, out / "qrels.txt")
