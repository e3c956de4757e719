import pytest

from retrievelab import synth
from retrievelab.corpus import Corpus, Document, Qrels, Query, QuerySet
from retrievelab.curriculum import CurriculumConfig, run_curriculum

BENCHMARK_SEED = synth.BENCHMARK_SEEDS[0]
CURRICULUM_SEEDS = (1, 2, 3)


@pytest.fixture
def tiny_corpus():
    return Corpus(
        [
            Document("d1", "the quick brown fox jumps over the lazy dog"),
            Document("d2", "pack my box with five dozen liquor jugs"),
            Document("d3", "how vexingly quick daft zebras jump"),
            Document("d4", "sphinx of black quartz judge my vow"),
            Document("d5", "the five boxing wizards jump quickly"),
            Document("d6", "jackdaws love my big sphinx of quartz"),
        ]
    )


@pytest.fixture
def tiny_queries():
    return QuerySet(
        [
            Query("q1", "quick brown fox"),
            Query("q2", "liquor jugs"),
            Query("q3", "sphinx quartz"),
        ]
    )


@pytest.fixture
def tiny_qrels():
    return Qrels({"q1": {"d1"}, "q2": {"d2"}, "q3": {"d4", "d6"}})


@pytest.fixture(scope="session")
def benchmark():
    return synth.make_benchmark(BENCHMARK_SEED)


@pytest.fixture(scope="session")
def curriculum_runs(benchmark, tmp_path_factory):
    """Full three-stage curriculum per seed; shared across the suite."""
    runs = {}
    for seed in CURRICULUM_SEEDS:
        out = tmp_path_factory.mktemp(f"curriculum_seed{seed}")
        registry = run_curriculum(
            benchmark.corpus,
            benchmark.train_queries,
            benchmark.qrels,
            CurriculumConfig(seed=seed),
            out,
            eval_queries=benchmark.eval_queries,
            eval_qrels=benchmark.qrels,
        )
        runs[seed] = (out, registry)
    return runs
