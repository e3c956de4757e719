"""Corpus/query/qrels data model, file ingestion, weak supervision, filters.

File formats:
  * corpus / queries: JSON lines, one object per line with ``id`` and ``text``
  * qrels: 4-column whitespace-separated TREC layout
    ``query_id 0 doc_id grade`` (grade > 0 means relevant)
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

from .hashing import SplitMix64
from .textnorm import normalize_text


class CorpusError(ValueError):
    """Malformed or inconsistent input data."""


class StageTag(enum.IntEnum):
    Base = 0
    Stage1 = 1
    Stage2 = 2
    Stage3 = 3


@dataclass(frozen=True)
class Document:
    id: str
    text: str  # NFC-normalized on ingest


@dataclass(frozen=True)
class Query:
    id: str
    text: str


@dataclass(frozen=True)
class CorpusStats:
    max_doc_len: int


class Corpus:
    """Immutable ordered document collection with id lookup."""

    def __init__(self, docs: Iterable[Document]):
        self._docs: list[Document] = list(docs)
        self._by_id: dict[str, Document] = {}
        for d in self._docs:
            if d.id in self._by_id:
                raise CorpusError(f"duplicate document id {d.id!r}")
            self._by_id[d.id] = d

    def __len__(self) -> int:
        return len(self._docs)

    def __iter__(self) -> Iterator[Document]:
        return iter(self._docs)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._by_id

    def __getitem__(self, doc_id: str) -> Document:
        return self._by_id[doc_id]

    def __eq__(self, other) -> bool:
        return isinstance(other, Corpus) and self._docs == other._docs

    @property
    def doc_ids(self) -> list[str]:
        return [d.id for d in self._docs]

    def stats(self) -> CorpusStats:
        return CorpusStats(max(len(d.text) for d in self._docs) if self._docs else 0)


class QuerySet:
    """Immutable ordered query collection."""

    def __init__(self, queries: Iterable[Query]):
        self._queries = list(queries)
        self._by_id: dict[str, Query] = {}
        for q in self._queries:
            if q.id in self._by_id:
                raise CorpusError(f"duplicate query id {q.id!r}")
            self._by_id[q.id] = q

    def __len__(self) -> int:
        return len(self._queries)

    def __iter__(self) -> Iterator[Query]:
        return iter(self._queries)

    def __getitem__(self, query_id: str) -> Query:
        return self._by_id[query_id]

    def __eq__(self, other) -> bool:
        return isinstance(other, QuerySet) and self._queries == other._queries


class Qrels:
    """Binary relevance judgments: query id -> set of relevant doc ids."""

    def __init__(self, judgments: dict[str, set[str]] | None = None):
        self._judgments = {q: set(ds) for q, ds in (judgments or {}).items()}

    def relevant(self, query_id: str) -> set[str]:
        return set(self._judgments.get(query_id, set()))

    def has_judgments(self, query_id: str) -> bool:
        return bool(self._judgments.get(query_id))

    def query_ids(self) -> list[str]:
        return list(self._judgments)

    def validate_against(self, corpus: Corpus) -> None:
        for qid, docs in self._judgments.items():
            for did in docs:
                if did not in corpus:
                    raise CorpusError(
                        f"qrels for query {qid!r} reference unknown document {did!r}"
                    )

    def __eq__(self, other) -> bool:
        return isinstance(other, Qrels) and self._judgments == other._judgments


@dataclass(frozen=True)
class TrainingExample:
    """A query with one positive and zero or more mined hard negatives."""

    query_text: str
    positive_id: str
    hard_negative_ids: tuple[str, ...] = ()
    stage_tag: StageTag = StageTag.Stage1
    query_id: str | None = None  # provenance, used for qrels lookup when mining

    def __post_init__(self):
        negs = tuple(self.hard_negative_ids)
        object.__setattr__(self, "hard_negative_ids", negs)
        if self.positive_id in negs:
            raise CorpusError(
                f"positive {self.positive_id!r} appears among hard negatives"
            )
        if len(set(negs)) != len(negs):
            raise CorpusError("duplicate hard negative ids")


def _parse_jsonl_records(path: Path) -> Iterator[tuple[int, str, str]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed record: {exc}") from exc
            if not isinstance(rec, dict) or "id" not in rec or "text" not in rec:
                raise CorpusError(f"{path}:{lineno}: record must have 'id' and 'text'")
            rec_id = str(rec["id"])
            if not rec_id:
                raise CorpusError(f"{path}:{lineno}: empty id")
            yield lineno, rec_id, str(rec["text"])


def load_corpus(path: str | Path) -> Corpus:
    path = Path(path)
    docs: list[Document] = []
    seen: dict[str, int] = {}
    for lineno, rec_id, text in _parse_jsonl_records(path):
        if rec_id in seen:
            raise CorpusError(
                f"{path}:{lineno}: duplicate id {rec_id!r} "
                f"(first seen on line {seen[rec_id]})"
            )
        seen[rec_id] = lineno
        docs.append(Document(rec_id, normalize_text(text)))
    return Corpus(docs)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            fh.write(json.dumps({"id": doc.id, "text": doc.text}, ensure_ascii=False))
            fh.write("\n")


def load_queries(path: str | Path) -> QuerySet:
    path = Path(path)
    queries: list[Query] = []
    seen: dict[str, int] = {}
    for lineno, rec_id, text in _parse_jsonl_records(path):
        if rec_id in seen:
            raise CorpusError(
                f"{path}:{lineno}: duplicate id {rec_id!r} "
                f"(first seen on line {seen[rec_id]})"
            )
        seen[rec_id] = lineno
        queries.append(Query(rec_id, normalize_text(text)))
    return QuerySet(queries)


def save_queries(queries: QuerySet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in queries:
            fh.write(json.dumps({"id": q.id, "text": q.text}, ensure_ascii=False))
            fh.write("\n")


def load_qrels(path: str | Path) -> Qrels:
    path = Path(path)
    judgments: dict[str, set[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise CorpusError(f"{path}:{lineno}: expected 4 columns, got {len(parts)}")
            qid, _, did, grade = parts
            try:
                grade_val = float(grade)
            except ValueError as exc:
                raise CorpusError(f"{path}:{lineno}: bad grade {grade!r}") from exc
            if grade_val > 0:
                judgments.setdefault(qid, set()).add(did)
    return Qrels(judgments)


def save_qrels(qrels: Qrels, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid in qrels.query_ids():
            for did in sorted(qrels.relevant(qid)):
                fh.write(f"{qid} 0 {did} 1\n")


def generate_weak_pairs(corpus: Corpus, count: int, seed: int) -> list[TrainingExample]:
    """Synthetic weak supervision: contiguous character spans of documents.

    Span length is uniform in [8, 32], clipped to the document length. Pure
    function of (corpus, count, seed).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    docs = list(corpus)
    if not docs:
        raise CorpusError("cannot generate weak pairs from an empty corpus")
    rng = SplitMix64(seed)
    out: list[TrainingExample] = []
    for _ in range(count):
        doc = docs[rng.next_below(len(docs))]
        n = len(doc.text)
        length = min(n, 8 + rng.next_below(25))  # uniform in [8, 32]
        start = rng.next_below(n - length + 1) if n > length else 0
        out.append(
            TrainingExample(
                query_text=doc.text[start : start + length],
                positive_id=doc.id,
                stage_tag=StageTag.Stage1,
            )
        )
    return out


def filter_stage3_queries(queries: QuerySet, qrels: Qrels) -> QuerySet:
    """Keep queries with at least one judged positive and text length >= 4."""
    kept = [q for q in queries if qrels.has_judgments(q.id) and len(q.text) >= 4]
    return QuerySet(kept)
