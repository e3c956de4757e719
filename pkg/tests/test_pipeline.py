import numpy as np
import pytest

from retrievelab.checkpoint import save_checkpoint
from retrievelab.corpus import Corpus, Query
from retrievelab.encoder import init_embedder
from retrievelab.pipeline import (
    Index,
    PipelineError,
    PipelineManifest,
    RetrievalResult,
    build_index,
    latency_report,
    read_trec_run,
    retrieve,
    run_pipeline,
    write_trec_run,
)
from retrievelab.reranker import init_reranker


def make_index(doc_ids, matrix):
    return Index(doc_ids=doc_ids, matrix=np.asarray(matrix, dtype=np.float64),
                 embedder_id="test")


def oracle(index, q, k):
    scores = q @ index.matrix
    rows = sorted(zip(index.doc_ids, scores), key=lambda t: (-t[1], t[0]))
    return [d for d, _ in rows[:k]]


def test_retrieve_matches_full_sort_oracle_random():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = rng.integers(1, 60)
        d = 8
        ids = [f"doc{int(i):03d}" for i in rng.permutation(n)]
        m = rng.normal(size=(d, n))
        index = make_index(ids, m)
        q = rng.normal(size=d)
        k = int(rng.integers(1, n + 5))
        got = [doc for doc, _ in retrieve(index, q, k)]
        assert got == oracle(index, q, k)


def test_retrieve_breaks_ties_by_ascending_id():
    # identical columns -> identical scores; order must be ascending id
    col = np.array([1.0, 2.0])
    m = np.stack([col, col, col], axis=1)
    index = make_index(["b", "c", "a"], m)
    got = [d for d, _ in retrieve(index, np.array([1.0, 0.0]), 3)]
    assert got == ["a", "b", "c"]


def test_retrieve_zero_scores_tie_by_id():
    m = np.zeros((2, 3))
    index = make_index(["z", "y", "x"], m)
    got = [d for d, _ in retrieve(index, np.array([1.0, -1.0]), 3)]
    assert got == ["x", "y", "z"]


def test_retrieve_k_clamped_and_validated():
    index = make_index(["a", "b"], np.eye(2))
    assert len(retrieve(index, np.array([1.0, 0.0]), 10)) == 2
    with pytest.raises(PipelineError, match="k must be"):
        retrieve(index, np.array([1.0, 0.0]), 0)


def test_build_index_rejects_empty_corpus():
    emb = init_embedder(0, dim=4, buckets=32)
    with pytest.raises(PipelineError, match="empty corpus"):
        build_index(emb, Corpus([]))


def test_manifest_validates_depths():
    with pytest.raises(PipelineError, match="k_rerank"):
        PipelineManifest("m", "e", 0, "r", 0, k_embed=10, k_rerank=20)
    m = PipelineManifest("m", "e", 0, "r", 0)
    assert (m.k_embed, m.k_rerank) == (60, 10)
    assert PipelineManifest.from_dict(m.to_dict()) == m


def test_run_pipeline_end_to_end(tmp_path, tiny_corpus):
    emb = init_embedder(0, dim=8, buckets=1 << 10)
    rr = init_reranker(0, emb.ckpt_id)
    emb_path, rr_path = tmp_path / "e.ckpt", tmp_path / "r.ckpt"
    save_checkpoint(emb, emb_path)
    save_checkpoint(rr, rr_path)
    manifest = PipelineManifest("m", str(emb_path), 0, str(rr_path), 0,
                                k_embed=4, k_rerank=2)
    index = build_index(emb, tiny_corpus)
    res = run_pipeline(manifest, Query("q1", "quick brown fox"), tiny_corpus, index)
    assert len(res.candidates) == 4
    assert len(res.final) == 2
    assert {d for d, _ in res.final} <= {d for d, _ in res.candidates}
    scores = [s for _, s in res.final]
    assert scores == sorted(scores, reverse=True)
    assert res.total_time == res.embed_time + res.retrieve_time + res.rerank_time


def test_run_pipeline_rejects_mismatched_index(tmp_path, tiny_corpus):
    emb_a = init_embedder(0, dim=8, buckets=1 << 10)
    emb_b = init_embedder(1, dim=8, buckets=1 << 10)
    rr = init_reranker(0, emb_a.ckpt_id)
    manifest = PipelineManifest("m", "unused", 0, "unused", 0, k_embed=3, k_rerank=1)
    index = build_index(emb_b, tiny_corpus)
    with pytest.raises(PipelineError, match="index was built with"):
        run_pipeline(manifest, Query("q", "x y z"), tiny_corpus, index, emb_a, rr)


def fake_result(qid, total):
    return RetrievalResult(qid, (), (), embed_time=0.0, retrieve_time=0.0,
                           rerank_time=total)


def test_latency_report_arithmetic():
    cand = [fake_result(f"q{i}", 618.0 / 389) for i in range(389)]
    base = [fake_result(f"q{i}", 579.0 / 389) for i in range(389)]
    rep = latency_report(cand, base)
    assert rep.query_count == 389
    assert rep.delta_s == pytest.approx(39.0, abs=1e-9)
    assert rep.per_query_delta_s == pytest.approx(39.0 / 389, abs=1e-9)
    assert rep.relative_increase == pytest.approx(39.0 / 579.0, abs=1e-12)


def test_latency_report_rejects_mismatched_queries():
    with pytest.raises(PipelineError, match="mismatched query sets"):
        latency_report([fake_result("a", 1.0)], [fake_result("b", 1.0)])


def test_trec_run_roundtrip(tmp_path):
    results = [
        RetrievalResult("q1", (("d2", 0.9), ("d1", 0.5)), (), 0, 0, 0),
        RetrievalResult("q2", (("d3", 0.7),), (), 0, 0, 0),
    ]
    path = tmp_path / "run.trec"
    write_trec_run(results, path, tag="t")
    lines = path.read_text().splitlines()
    assert lines[0] == "q1 Q0 d2 1 0.900000 t"
    run = read_trec_run(path)
    assert run == {"q1": ["d2", "d1"], "q2": ["d3"]}


def test_read_trec_run_rejects_bad_columns(tmp_path):
    path = tmp_path / "bad.trec"
    path.write_text("q1 Q0 d1 1\n")
    with pytest.raises(PipelineError, match="expected 6 columns"):
        read_trec_run(path)
