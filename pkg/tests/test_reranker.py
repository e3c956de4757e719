import math

import numpy as np
import pytest

from retrievelab.corpus import CorpusStats, TrainingExample
from retrievelab.encoder import embed, init_embedder
from retrievelab.reranker import (
    N_FEATURES,
    RerankerCheckpoint,
    RerankTrainConfig,
    cross_features_text,
    init_reranker,
    pairwise_loss_and_grad,
    score,
    train_epoch,
)


@pytest.fixture(scope="module")
def emb():
    return init_embedder(0, dim=8, buckets=1 << 10)


STATS = CorpusStats(max_doc_len=50)


def test_init_reranker_scores_by_cosine_only(emb):
    rr = init_reranker(0, "ref")
    f = cross_features_text("quick fox", "the quick brown fox", emb, STATS)
    expected_cos = float(embed(emb, "quick fox") @ embed(emb, "the quick brown fox"))
    assert math.isclose(score(rr, f), expected_cos, rel_tol=1e-6)


def test_cross_features_closed_form(emb):
    q, d = "abcd", "abcd"
    f = cross_features_text(q, d, emb, STATS)
    assert f.shape == (N_FEATURES,)
    assert math.isclose(f[0], 1.0, rel_tol=1e-12)  # identical text, unit cosine
    assert f[1] == 1.0  # identical bigram sets
    assert f[2] == 1.0  # full coverage
    assert f[3] == 0.0  # no length gap
    assert f[4] == 1.0  # bias


def test_cross_features_jaccard_and_coverage(emb):
    # bigrams("abc") = {ab, bc}; bigrams("bcd") = {bc, cd}
    f = cross_features_text("abc", "bcd", emb, STATS)
    assert math.isclose(f[1], 1 / 3)
    assert math.isclose(f[2], 1 / 2)


def test_cross_features_empty_edge_cases(emb):
    f = cross_features_text("", "", emb, STATS)
    assert f[1] == 1.0 and f[2] == 1.0
    f = cross_features_text("", "abc", emb, STATS)
    assert f[2] == 0.0
    f = cross_features_text("abc", "abc", emb, CorpusStats(max_doc_len=0))
    assert f[3] == 0.0


def test_length_gap_normalized_and_clipped(emb):
    f = cross_features_text("ab", "x" * 50, emb, STATS)
    expected = (math.log1p(50) - math.log1p(2)) / math.log1p(50)
    assert math.isclose(f[3], expected, rel_tol=1e-12)
    assert 0.0 <= f[3] <= 1.0


def test_pairwise_loss_closed_form():
    rr = RerankerCheckpoint(
        weights=np.array([1.0, 0, 0, 0, 0], dtype=np.float32),
        stage=0, seed=0, embedder_ref="",
    )
    fp = np.array([2.0, 0, 0, 0, 0])
    fn = np.array([1.0, 0, 0, 0, 0])
    loss, grad = pairwise_loss_and_grad(rr, fp, fn)
    assert math.isclose(loss, math.log1p(math.exp(-1.0)), rel_tol=1e-12)
    sig = 1 / (1 + math.exp(-1.0))
    assert np.allclose(grad, -(1 - sig) * (fp - fn))


def test_pairwise_loss_overflow_safe():
    rr = RerankerCheckpoint(
        weights=np.array([1.0, 0, 0, 0, 0], dtype=np.float32),
        stage=0, seed=0, embedder_ref="",
    )
    big = np.array([1e4, 0, 0, 0, 0])
    for fp, fn in ((big, -big), (-big, big)):
        loss, grad = pairwise_loss_and_grad(rr, fp, fn)
        assert math.isfinite(loss) and np.all(np.isfinite(grad))
    # symmetric margins: L(m) + L(-m) relation via softplus
    lp, _ = pairwise_loss_and_grad(rr, big, -big)
    assert lp == pytest.approx(0.0, abs=1e-12)


def test_pairwise_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    h = 1e-5
    for _ in range(100):
        w = rng.normal(size=N_FEATURES).astype(np.float32)
        fp = rng.normal(size=N_FEATURES)
        fn = rng.normal(size=N_FEATURES)
        rr = RerankerCheckpoint(weights=w, stage=0, seed=0, embedder_ref="")
        _, grad = pairwise_loss_and_grad(rr, fp, fn)
        for i in range(N_FEATURES):
            wp, wm = w.astype(np.float64).copy(), w.astype(np.float64).copy()
            wp[i] += h
            wm[i] -= h
            lp, _ = pairwise_loss_and_grad(
                RerankerCheckpoint(wp, 0, 0, ""), fp, fn
            )
            lm, _ = pairwise_loss_and_grad(
                RerankerCheckpoint(wm, 0, 0, ""), fp, fn
            )
            fd = (lp - lm) / (2 * h)
            assert abs(fd - grad[i]) <= 1e-4 * max(abs(fd), abs(grad[i]), 1e-8)


def test_train_epoch_deterministic_and_moves_weights(tiny_corpus, emb):
    examples = [
        TrainingExample("quick brown", "d1", ("d2", "d3")),
        TrainingExample("sphinx quartz", "d4", ("d5",)),
    ]
    cfg = RerankTrainConfig(learning_rate=0.1, seed=5)
    rr = init_reranker(0, emb.ckpt_id)
    a = train_epoch(rr, examples, tiny_corpus, emb, cfg)
    b = train_epoch(rr, examples, tiny_corpus, emb, cfg)
    assert np.array_equal(a.weights, b.weights)
    assert not np.array_equal(a.weights, rr.weights)
    assert a.trained_examples == 2


def test_train_epoch_rejects_examples_without_negatives(tiny_corpus, emb):
    rr = init_reranker(0, emb.ckpt_id)
    with pytest.raises(ValueError, match="no hard negatives"):
        train_epoch(
            rr,
            [TrainingExample("quick", "d1")],
            tiny_corpus,
            emb,
            RerankTrainConfig(0.1, 1),
        )
    with pytest.raises(ValueError, match="nonempty"):
        train_epoch(rr, [], tiny_corpus, emb, RerankTrainConfig(0.1, 1))
