"""Offline double-blind A/B harness.

Pairs are built from two pipeline manifests run over the same queries.
Queries whose two final doc-id lists are identical become auto-ties and are
never judged. For the rest, left/right placement is a seeded fair coin; the
judge-facing pair record carries no assignment information, and unblinding
happens only at aggregation. Sessions persist as append-only JSONL journals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import Corpus, Query, QuerySet
from .hashing import SplitMix64, mix_seed
from .pipeline import Index, PipelineManifest, RetrievalResult, run_pipeline
from .textnorm import normalize_text

SNIPPET_CHARS = 200
CHOICES = ("left", "right", "tie")


class ABError(ValueError):
    pass


@dataclass(frozen=True)
class Snippet:
    doc_id: str
    text: str


@dataclass(frozen=True)
class ABPair:
    """Blinded pair. Deliberately carries no system/assignment field."""

    pair_id: str
    query_id: str
    query_text: str
    left: tuple[Snippet, ...]
    right: tuple[Snippet, ...]
    auto_tie: bool
    dataset_label: str = ""

    def judge_facing(self) -> dict:
        return {
            "type": "pair",
            "pair_id": self.pair_id,
            "query_id": self.query_id,
            "query_text": self.query_text,
            "left": [{"doc_id": s.doc_id, "text": s.text} for s in self.left],
            "right": [{"doc_id": s.doc_id, "text": s.text} for s in self.right],
            "auto_tie": self.auto_tie,
            "dataset_label": self.dataset_label,
        }


@dataclass
class ABSession:
    session_id: str
    manifest_a_id: str
    manifest_b_id: str
    candidate: str  # "A" or "B": the system the win rate is reported for
    pairs: list[ABPair]
    assignments: dict[str, str]  # pair_id -> which system is on the left
    latency_a_s: float
    latency_b_s: float
    query_count: int
    seed: int
    judgments: dict[str, str] = field(default_factory=dict)
    journal_path: str | None = None
    _seq: int = 0

    def pair(self, pair_id: str) -> ABPair:
        for p in self.pairs:
            if p.pair_id == pair_id:
                return p
        raise ABError(f"unknown pair {pair_id!r}")

    def judgeable_pairs(self) -> list[ABPair]:
        return [p for p in self.pairs if not p.auto_tie]

    def next_unjudged(self) -> ABPair | None:
        for p in self.pairs:
            if not p.auto_tie and p.pair_id not in self.judgments:
                return p
        return None

    def is_complete(self) -> bool:
        return self.next_unjudged() is None


def _snippets(result: RetrievalResult, corpus: Corpus) -> tuple[Snippet, ...]:
    return tuple(
        Snippet(doc_id, normalize_text(corpus[doc_id].text)[:SNIPPET_CHARS])
        for doc_id, _ in result.final
    )


def build_session_from_results(
    manifest_a_id: str,
    manifest_b_id: str,
    results_a: Sequence[RetrievalResult],
    results_b: Sequence[RetrievalResult],
    queries: QuerySet,
    corpus: Corpus,
    seed: int,
    session_id: str = "session",
    journal_path: str | Path | None = None,
    dataset_labels: dict[str, str] | None = None,
) -> ABSession:
    if len(results_a) != len(results_b):
        raise ABError("result lists must cover the same queries")
    rng = SplitMix64(mix_seed(seed, 0xAB))
    pairs: list[ABPair] = []
    assignments: dict[str, str] = {}
    for i, (ra, rb) in enumerate(zip(results_a, results_b)):
        if ra.query_id != rb.query_id:
            raise ABError(f"query id mismatch at position {i}")
        q = queries[ra.query_id]
        pair_id = f"p{i:05d}"
        auto_tie = [d for d, _ in ra.final] == [d for d, _ in rb.final]
        left_system = "A" if rng.next_below(2) == 0 else "B"
        left, right = (ra, rb) if left_system == "A" else (rb, ra)
        pairs.append(
            ABPair(
                pair_id=pair_id,
                query_id=q.id,
                query_text=q.text,
                left=_snippets(left, corpus),
                right=_snippets(right, corpus),
                auto_tie=auto_tie,
                dataset_label=(dataset_labels or {}).get(q.id, ""),
            )
        )
        assignments[pair_id] = left_system
    session = ABSession(
        session_id=session_id,
        manifest_a_id=manifest_a_id,
        manifest_b_id=manifest_b_id,
        candidate="A",
        pairs=pairs,
        assignments=assignments,
        latency_a_s=sum(r.total_time for r in results_a),
        latency_b_s=sum(r.total_time for r in results_b),
        query_count=len(results_a),
        seed=seed,
    )
    if journal_path is not None:
        write_journal(session, journal_path)
        session.journal_path = str(journal_path)
    return session


def build_session(
    manifest_a: PipelineManifest,
    manifest_b: PipelineManifest,
    queries: QuerySet,
    corpus: Corpus,
    index_a: Index,
    index_b: Index,
    seed: int,
    session_id: str = "session",
    journal_path: str | Path | None = None,
    dataset_labels: dict[str, str] | None = None,
) -> ABSession:
    results_a = [run_pipeline(manifest_a, q, corpus, index_a) for q in queries]
    results_b = [run_pipeline(manifest_b, q, corpus, index_b) for q in queries]
    return build_session_from_results(
        manifest_a.manifest_id,
        manifest_b.manifest_id,
        results_a,
        results_b,
        queries,
        corpus,
        seed,
        session_id=session_id,
        journal_path=journal_path,
        dataset_labels=dataset_labels,
    )


def record_judgment(session: ABSession, pair_id: str, choice: str) -> ABSession:
    """Store one human judgment. The recorder never sees the assignment;
    translation to a system-level win happens only in ``aggregate``."""
    if choice not in CHOICES:
        raise ABError(f"choice must be one of {CHOICES}, got {choice!r}")
    pair = session.pair(pair_id)
    if pair.auto_tie:
        raise ABError(f"pair {pair_id!r} is an auto-tie; no judgment allowed")
    if pair_id in session.judgments:
        raise ABError(f"pair {pair_id!r} already judged")
    session.judgments[pair_id] = choice
    if session.journal_path:
        _append_journal(session, {"type": "judgment", "pair_id": pair_id, "choice": choice})
    return session


@dataclass(frozen=True)
class ABReport:
    wins_a: int
    wins_b: int
    ties: int
    auto_ties: int
    candidate: str
    win_rate_excluding_ties: float | None
    latency_a_s: float
    latency_b_s: float
    query_count: int
    partial: bool
    per_label: dict[str, dict[str, int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "wins_a": self.wins_a,
            "wins_b": self.wins_b,
            "ties": self.ties,
            "auto_ties": self.auto_ties,
            "candidate": self.candidate,
            "win_rate_excluding_ties": self.win_rate_excluding_ties,
            "latency_a_s": self.latency_a_s,
            "latency_b_s": self.latency_b_s,
            "query_count": self.query_count,
            "partial": self.partial,
            "per_label": self.per_label,
        }


def aggregate(session: ABSession, partial: bool = False) -> ABReport:
    """Unblind via stored assignments and compute tie-excluded win rate."""
    if not partial and not session.is_complete():
        remaining = sum(
            1 for p in session.judgeable_pairs() if p.pair_id not in session.judgments
        )
        raise ABError(
            f"{remaining} judgeable pairs unjudged; pass partial=True to aggregate anyway"
        )
    wins = {"A": 0, "B": 0}
    ties = 0
    auto = 0
    per_label: dict[str, dict[str, int]] = {}
    for p in session.pairs:
        if p.auto_tie:
            ties += 1
            auto += 1
            outcome = "tie"
        else:
            choice = session.judgments.get(p.pair_id)
            if choice is None:
                continue
            if choice == "tie":
                ties += 1
                outcome = "tie"
            else:
                left_sys = session.assignments[p.pair_id]
                winner = left_sys if choice == "left" else ("B" if left_sys == "A" else "A")
                wins[winner] += 1
                outcome = winner
        if p.dataset_label:
            bucket = per_label.setdefault(
                p.dataset_label, {"A": 0, "B": 0, "tie": 0}
            )
            bucket[outcome] += 1
    judged_total = wins["A"] + wins["B"]
    cand_wins = wins[session.candidate]
    rate = cand_wins / judged_total if judged_total else None
    return ABReport(
        wins_a=wins["A"],
        wins_b=wins["B"],
        ties=ties,
        auto_ties=auto,
        candidate=session.candidate,
        win_rate_excluding_ties=rate,
        latency_a_s=session.latency_a_s,
        latency_b_s=session.latency_b_s,
        query_count=session.query_count,
        partial=not session.is_complete(),
        per_label=per_label,
    )


# --- journal persistence -------------------------------------------------

def _append_journal(session: ABSession, record: dict) -> None:
    session._seq += 1
    record = {"seq": session._seq, **record}
    with open(session.journal_path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def write_journal(session: ABSession, path: str | Path) -> None:
    """Write the build portion of a session journal.

    Pair records are exactly the judge-facing blinded form; assignments live
    in separate records that a judge never requests.
    """
    seq = 0
    with open(path, "w", encoding="utf-8") as fh:

        def emit(rec: dict) -> None:
            nonlocal seq
            seq += 1
            fh.write(json.dumps({"seq": seq, **rec}, ensure_ascii=False) + "\n")

        emit(
            {
                "type": "session",
                "session_id": session.session_id,
                "manifest_a_id": session.manifest_a_id,
                "manifest_b_id": session.manifest_b_id,
                "candidate": session.candidate,
                "latency_a_s": session.latency_a_s,
                "latency_b_s": session.latency_b_s,
                "query_count": session.query_count,
                "seed": session.seed,
            }
        )
        for p in session.pairs:
            emit(p.judge_facing())
        for p in session.pairs:
            emit(
                {
                    "type": "assignment",
                    "pair_id": p.pair_id,
                    "left_system": session.assignments[p.pair_id],
                }
            )
        for pair_id, choice in session.judgments.items():
            emit({"type": "judgment", "pair_id": pair_id, "choice": choice})
    session._seq = seq


def load_session(path: str | Path) -> ABSession:
    path = Path(path)
    meta = None
    pairs: list[ABPair] = []
    assignments: dict[str, str] = {}
    judgments: dict[str, str] = {}
    seq = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec.get("seq") != seq + 1:
                raise ABError(
                    f"{path}:{lineno}: journal sequence gap "
                    f"(expected {seq + 1}, found {rec.get('seq')})"
                )
            seq = rec["seq"]
            kind = rec.get("type")
            if kind == "session":
                meta = rec
            elif kind == "pair":
                pairs.append(
                    ABPair(
                        pair_id=rec["pair_id"],
                        query_id=rec["query_id"],
                        query_text=rec["query_text"],
                        left=tuple(Snippet(s["doc_id"], s["text"]) for s in rec["left"]),
                        right=tuple(Snippet(s["doc_id"], s["text"]) for s in rec["right"]),
                        auto_tie=rec["auto_tie"],
                        dataset_label=rec.get("dataset_label", ""),
                    )
                )
            elif kind == "assignment":
                assignments[rec["pair_id"]] = rec["left_system"]
            elif kind == "judgment":
                judgments[rec["pair_id"]] = rec["choice"]
            else:
                raise ABError(f"{path}:{lineno}: unknown record type {kind!r}")
    if meta is None:
        raise ABError(f"{path}: no session record")
    session = ABSession(
        session_id=meta["session_id"],
        manifest_a_id=meta["manifest_a_id"],
        manifest_b_id=meta["manifest_b_id"],
        candidate=meta.get("candidate", "A"),
        pairs=pairs,
        assignments=assignments,
        latency_a_s=meta["latency_a_s"],
        latency_b_s=meta["latency_b_s"],
        query_count=meta["query_count"],
        seed=meta.get("seed", 0),
        judgments=judgments,
        journal_path=str(path),
    )
    session._seq = seq
    return session


def judge_facing_records(path: str | Path) -> list[dict]:
    """The journal filtered to what a judge can request: pair records only."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                if rec.get("type") == "pair":
                    out.append(rec)
    return out
