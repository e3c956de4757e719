"""HTTP gateway: retrieval and A/B judging over file-backed state.

A thin adapter: every endpoint delegates to the corresponding in-process
operation. Judge-facing responses are built exclusively from the blinded
pair records, so assignments can never leak over the wire.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import abtest
from .checkpoint import load_checkpoint
from .corpus import Query, load_corpus
from .pipeline import PipelineManifest, build_index, run_pipeline


@dataclass
class ServiceConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8970
    data_dir: str = "."
    manifest_registry_path: str | None = None  # default: <data_dir>/manifests.json
    session_store_path: str | None = None  # default: <data_dir>/sessions
    corpus_path: str | None = None  # default: <data_dir>/corpus.jsonl

    def __post_init__(self):
        base = Path(self.data_dir)
        if self.manifest_registry_path is None:
            self.manifest_registry_path = str(base / "manifests.json")
        if self.session_store_path is None:
            self.session_store_path = str(base / "sessions")
        if self.corpus_path is None:
            self.corpus_path = str(base / "corpus.jsonl")


class RetrieveRequest(BaseModel):
    query_text: str
    manifest_id: str
    k_embed: int | None = None
    k_rerank: int | None = None


class JudgmentRequest(BaseModel):
    pair_id: str
    choice: str


class _State:
    """Lazy, immutable-while-serving model state plus per-session locks."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self._corpus = None
        self._manifests: dict[str, PipelineManifest] | None = None
        self._ckpts: dict[str, object] = {}
        self._indexes: dict[str, object] = {}
        self._sessions: dict[str, abtest.ABSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    @property
    def corpus(self):
        if self._corpus is None:
            self._corpus = load_corpus(self.config.corpus_path)
        return self._corpus

    def manifests(self) -> dict[str, PipelineManifest]:
        if self._manifests is None:
            path = Path(self.config.manifest_registry_path)
            records = json.loads(path.read_text()) if path.exists() else []
            self._manifests = {
                m["manifest_id"]: PipelineManifest.from_dict(m) for m in records
            }
        return self._manifests

    def checkpoint(self, path: str):
        if path not in self._ckpts:
            self._ckpts[path] = load_checkpoint(path)
        return self._ckpts[path]

    def index_for(self, embedder):
        if embedder.ckpt_id not in self._indexes:
            self._indexes[embedder.ckpt_id] = build_index(embedder, self.corpus)
        return self._indexes[embedder.ckpt_id]

    def session_ids(self) -> list[str]:
        store = Path(self.config.session_store_path)
        ids = set(self._sessions)
        if store.is_dir():
            ids.update(p.stem for p in store.glob("*.jsonl"))
        return sorted(ids)

    def session(self, session_id: str) -> abtest.ABSession | None:
        if session_id not in self._sessions:
            path = Path(self.config.session_store_path) / f"{session_id}.jsonl"
            if not path.exists():
                return None
            self._sessions[session_id] = abtest.load_session(path)
        return self._sessions[session_id]

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())


def _error(status: int, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": detail})


def create_app(config: ServiceConfig) -> FastAPI:
    state = _State(config)
    app = FastAPI(title="retrievelab gateway")

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        fields = ", ".join(
            ".".join(str(p) for p in err["loc"] if p != "body") or "body"
            for err in exc.errors()
        )
        return _error(400, f"malformed request body: {fields}")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/retrieve")
    def retrieve_endpoint(req: RetrieveRequest):
        manifest = state.manifests().get(req.manifest_id)
        if manifest is None:
            return _error(404, f"unknown manifest {req.manifest_id!r}")
        if req.k_embed or req.k_rerank:
            d = manifest.to_dict()
            d["k_embed"] = req.k_embed or manifest.k_embed
            d["k_rerank"] = req.k_rerank or manifest.k_rerank
            try:
                manifest = PipelineManifest.from_dict(d)
            except ValueError as exc:
                return _error(400, str(exc))
        embedder = state.checkpoint(manifest.embedder_path)
        reranker = state.checkpoint(manifest.reranker_path)
        index = state.index_for(embedder)
        result = run_pipeline(
            manifest,
            Query("adhoc", req.query_text),
            state.corpus,
            index,
            embedder,
            reranker,
        )
        return {
            "query_text": req.query_text,
            "manifest_id": req.manifest_id,
            "final": [{"doc_id": d_, "score": s} for d_, s in result.final],
            "candidates": [{"doc_id": d_, "score": s} for d_, s in result.candidates],
            "embed_time": result.embed_time,
            "retrieve_time": result.retrieve_time,
            "rerank_time": result.rerank_time,
            "total_time": result.total_time,
        }

    @app.get("/ab/sessions")
    def list_sessions():
        out = []
        for sid in state.session_ids():
            s = state.session(sid)
            judgeable = len(s.judgeable_pairs())
            out.append(
                {
                    "session_id": s.session_id,
                    "pair_count": len(s.pairs),
                    "judgeable": judgeable,
                    "judged": len(s.judgments),
                    "complete": s.is_complete(),
                }
            )
        return {"sessions": out}

    @app.get("/ab/sessions/{session_id}/next")
    def next_pair(session_id: str):
        s = state.session(session_id)
        if s is None:
            return _error(404, f"unknown session {session_id!r}")
        judgeable = s.judgeable_pairs()
        pair = s.next_unjudged()
        if pair is None:
            return {
                "done": True,
                "judged": len(s.judgments),
                "total_judgeable": len(judgeable),
            }
        return {
            "done": False,
            "judged": len(s.judgments),
            "total_judgeable": len(judgeable),
            "pair": pair.judge_facing(),
        }

    @app.post("/ab/sessions/{session_id}/judgments")
    def post_judgment(session_id: str, req: JudgmentRequest):
        s = state.session(session_id)
        if s is None:
            return _error(404, f"unknown session {session_id!r}")
        if req.choice not in abtest.CHOICES:
            return _error(400, f"choice must be one of {list(abtest.CHOICES)}")
        with state.lock_for(session_id):
            try:
                pair = s.pair(req.pair_id)
            except abtest.ABError:
                return _error(404, f"unknown pair {req.pair_id!r}")
            if pair.auto_tie or req.pair_id in s.judgments:
                return _error(
                    409,
                    f"pair {req.pair_id!r} "
                    + ("is an auto-tie" if pair.auto_tie else "already judged"),
                )
            abtest.record_judgment(s, req.pair_id, req.choice)
            remaining = sum(
                1 for p in s.judgeable_pairs() if p.pair_id not in s.judgments
            )
        return {"recorded": True, "pair_id": req.pair_id, "remaining": remaining}

    @app.get("/ab/sessions/{session_id}/report")
    def report(session_id: str):
        s = state.session(session_id)
        if s is None:
            return _error(404, f"unknown session {session_id!r}")
        return abtest.aggregate(s, partial=True).to_dict()

    app.state.gateway = state
    return app
