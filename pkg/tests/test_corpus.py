import pytest

from retrievelab.corpus import (
    Corpus,
    CorpusError,
    Document,
    Qrels,
    Query,
    QuerySet,
    StageTag,
    TrainingExample,
    filter_stage3_queries,
    generate_weak_pairs,
    load_corpus,
    load_qrels,
    load_queries,
    save_corpus,
    save_qrels,
    save_queries,
)


def test_corpus_lookup_and_order(tiny_corpus):
    assert len(tiny_corpus) == 6
    assert tiny_corpus["d3"].text.startswith("how vexingly")
    assert tiny_corpus.doc_ids[0] == "d1"
    assert "d4" in tiny_corpus and "nope" not in tiny_corpus


def test_duplicate_doc_id_rejected():
    with pytest.raises(CorpusError, match="duplicate document id 'x'"):
        Corpus([Document("x", "a"), Document("x", "b")])


def test_stats_max_doc_len(tiny_corpus):
    assert tiny_corpus.stats().max_doc_len == max(
        len(d.text) for d in tiny_corpus
    )
    assert Corpus([]).stats().max_doc_len == 0


def test_corpus_roundtrip(tmp_path, tiny_corpus):
    path = tmp_path / "corpus.jsonl"
    save_corpus(tiny_corpus, path)
    assert load_corpus(path) == tiny_corpus


def test_load_corpus_normalizes(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"id": "a", "text": "  Hello\\tWORLD "}\n')
    assert load_corpus(path)["a"].text == "hello world"


def test_load_corpus_duplicate_names_id_and_line(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"id": "a", "text": "x"}\n{"id": "a", "text": "y"}\n')
    with pytest.raises(CorpusError, match=r"2: duplicate id 'a' \(first seen on line 1\)"):
        load_corpus(path)


def test_load_corpus_malformed_line_number(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"id": "a", "text": "x"}\nnot json\n')
    with pytest.raises(CorpusError, match=":2: malformed record"):
        load_corpus(path)


def test_load_corpus_missing_field(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"id": "a"}\n')
    with pytest.raises(CorpusError, match="must have 'id' and 'text'"):
        load_corpus(path)


def test_queries_roundtrip_and_duplicates(tmp_path, tiny_queries):
    path = tmp_path / "q.jsonl"
    save_queries(tiny_queries, path)
    assert load_queries(path) == tiny_queries
    path.write_text('{"id": "q", "text": "x"}\n{"id": "q", "text": "y"}\n')
    with pytest.raises(CorpusError, match="duplicate id 'q'"):
        load_queries(path)


def test_qrels_roundtrip(tmp_path, tiny_qrels):
    path = tmp_path / "qrels.txt"
    save_qrels(tiny_qrels, path)
    assert load_qrels(path) == tiny_qrels


def test_qrels_grade_zero_not_relevant(tmp_path):
    path = tmp_path / "qrels.txt"
    path.write_text("q1 0 d1 0\nq1 0 d2 1\n")
    assert load_qrels(path).relevant("q1") == {"d2"}


def test_qrels_bad_layout(tmp_path):
    path = tmp_path / "qrels.txt"
    path.write_text("q1 0 d1\n")
    with pytest.raises(CorpusError, match="expected 4 columns"):
        load_qrels(path)
    path.write_text("q1 0 d1 high\n")
    with pytest.raises(CorpusError, match="bad grade 'high'"):
        load_qrels(path)


def test_qrels_validate_against(tiny_corpus):
    Qrels({"q1": {"d1"}}).validate_against(tiny_corpus)
    with pytest.raises(CorpusError, match="unknown document 'zzz'"):
        Qrels({"q1": {"zzz"}}).validate_against(tiny_corpus)


def test_training_example_validation():
    with pytest.raises(CorpusError, match="appears among hard negatives"):
        TrainingExample("q", "d1", ("d1", "d2"))
    with pytest.raises(CorpusError, match="duplicate hard negative"):
        TrainingExample("q", "d1", ("d2", "d2"))
    ex = TrainingExample("q", "d1", ["d2", "d3"])
    assert ex.hard_negative_ids == ("d2", "d3")


def test_weak_pairs_are_document_spans(tiny_corpus):
    pairs = generate_weak_pairs(tiny_corpus, 200, seed=7)
    assert len(pairs) == 200
    for ex in pairs:
        assert ex.stage_tag == StageTag.Stage1
        assert ex.query_text in tiny_corpus[ex.positive_id].text
        assert 1 <= len(ex.query_text) <= 32


def test_weak_pairs_deterministic(tiny_corpus):
    a = generate_weak_pairs(tiny_corpus, 50, seed=3)
    b = generate_weak_pairs(tiny_corpus, 50, seed=3)
    c = generate_weak_pairs(tiny_corpus, 50, seed=4)
    assert a == b
    assert a != c


def test_weak_pairs_rejects_bad_input(tiny_corpus):
    with pytest.raises(ValueError, match="count"):
        generate_weak_pairs(tiny_corpus, 0, seed=1)
    with pytest.raises(CorpusError, match="empty corpus"):
        generate_weak_pairs(Corpus([]), 1, seed=1)


def test_filter_stage3_queries():
    queries = QuerySet(
        [
            Query("q1", "long enough"),
            Query("q2", "ab"),  # too short
            Query("q3", "also long enough"),  # no judgments
            Query("q4", "fine"),
        ]
    )
    qrels = Qrels({"q1": {"d1"}, "q2": {"d1"}, "q4": {"d2"}})
    kept = filter_stage3_queries(queries, qrels)
    assert [q.id for q in kept] == ["q1", "q4"]
