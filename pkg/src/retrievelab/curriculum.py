"""Three-stage refinement for both components, plus the checkpoint registry.

Stage 1 trains on synthetic weak span pairs with in-batch negatives.
Stage 2 mines hard negatives once with the incoming checkpoint, then trains.
Stage 3 restricts to filtered queries and re-mines with the current
checkpoint before every epoch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import encoder, reranker
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import (
    Corpus,
    Qrels,
    QuerySet,
    StageTag,
    TrainingExample,
    filter_stage3_queries,
    generate_weak_pairs,
)
from .encoder import EmbedderCheckpoint, TrainConfig
from .evalsel import evaluate_run, sweep_recall_budget
from .hashing import mix_seed
from .miner import MiningConfig, attach_negatives
from .pipeline import Index, build_index, retrieve
from .reranker import RerankerCheckpoint, RerankTrainConfig, cross_features_text


class CurriculumError(ValueError):
    pass


class StageOrderError(CurriculumError):
    pass


@dataclass(frozen=True)
class StagePlan:
    stage: StageTag
    epochs: int
    learning_rate: float
    data_source: str  # weak_pairs | mined_pairs | filtered_mined_pairs
    refresh_negatives_each_epoch: bool = False

    def __post_init__(self):
        if self.data_source not in (
            "weak_pairs",
            "mined_pairs",
            "filtered_mined_pairs",
        ):
            raise CurriculumError(f"unknown data source {self.data_source!r}")
        if self.refresh_negatives_each_epoch and self.stage != StageTag.Stage3:
            raise CurriculumError("per-epoch negative refresh is Stage3-only")


def default_stage_plans() -> dict[StageTag, StagePlan]:
    return {
        StageTag.Stage1: StagePlan(StageTag.Stage1, 3, 0.1, "weak_pairs"),
        StageTag.Stage2: StagePlan(StageTag.Stage2, 2, 0.05, "mined_pairs"),
        StageTag.Stage3: StagePlan(
            StageTag.Stage3, 2, 0.02, "filtered_mined_pairs", True
        ),
    }


@dataclass(frozen=True)
class CurriculumConfig:
    seed: int
    plans: dict[StageTag, StagePlan] = field(default_factory=default_stage_plans)
    weak_pair_count: int = 2048
    batch_size: int = 32
    tau: float = encoder.DEFAULT_TAU
    mining: MiningConfig = field(default_factory=MiningConfig)
    eval_ks: tuple[int, ...] = (20, 60, 100)
    ndcg_cutoff: int = 10
    eval_k_candidates: int = 60  # candidate depth for reranker validation


@dataclass
class RegistryEntry:
    component: str
    stage: StageTag
    path: str
    ckpt_id: str
    seed: int
    metrics: dict[str, float]


class CheckpointRegistry:
    """Stage-tagged checkpoints per component with validation snapshots.

    Stage_k may only be added once Stage_{k-1} exists (Base is the root)."""

    def __init__(self):
        self._entries: dict[tuple[str, StageTag], RegistryEntry] = {}

    def add(self, entry: RegistryEntry) -> None:
        key = (entry.component, entry.stage)
        if entry.stage != StageTag.Base:
            prev = (entry.component, StageTag(entry.stage - 1))
            if prev not in self._entries:
                raise CurriculumError(
                    f"registry invariant violation: {entry.component}/"
                    f"{entry.stage.name} requires {StageTag(entry.stage - 1).name}"
                )
        self._entries[key] = entry

    def get(self, component: str, stage: StageTag) -> RegistryEntry:
        key = (component, StageTag(stage))
        if key not in self._entries:
            raise CurriculumError(
                f"registry invariant violation: missing {component}/{StageTag(stage).name}"
            )
        return self._entries[key]

    def missing_entries(self) -> list[tuple[str, StageTag]]:
        return [
            (c, s)
            for c in ("embedder", "reranker")
            for s in StageTag
            if (c, s) not in self._entries
        ]

    def entries(self) -> list[RegistryEntry]:
        return list(self._entries.values())

    def save(self, path: str | Path) -> None:
        records = [
            {
                "component": e.component,
                "stage": int(e.stage),
                "path": e.path,
                "ckpt_id": e.ckpt_id,
                "seed": e.seed,
                "metrics": e.metrics,
            }
            for e in self._entries.values()
        ]
        Path(path).write_text(json.dumps(records, indent=2, sort_keys=True))

    @staticmethod
    def load(path: str | Path) -> "CheckpointRegistry":
        reg = CheckpointRegistry()
        records = json.loads(Path(path).read_text())
        records.sort(key=lambda r: (r["component"], r["stage"]))
        for r in records:
            reg.add(
                RegistryEntry(
                    component=r["component"],
                    stage=StageTag(r["stage"]),
                    path=r["path"],
                    ckpt_id=r["ckpt_id"],
                    seed=r["seed"],
                    metrics=dict(r["metrics"]),
                )
            )
        return reg


def _stage_examples_from_queries(
    queries: QuerySet, qrels: Qrels, stage: StageTag
) -> list[TrainingExample]:
    """One example per judged query; positive is the lowest relevant doc id."""
    out = []
    for q in queries:
        rel = qrels.relevant(q.id)
        if rel:
            out.append(
                TrainingExample(
                    query_text=q.text,
                    positive_id=min(rel),
                    stage_tag=stage,
                    query_id=q.id,
                )
            )
    return out


def run_stage(
    plan: StagePlan,
    component: str,
    prev,
    corpus: Corpus,
    queries: QuerySet,
    qrels: Qrels,
    seed: int,
    *,
    config: CurriculumConfig | None = None,
    embedder: EmbedderCheckpoint | None = None,
    mining_log: list | None = None,
):
    """Train one stage of one component on top of the previous checkpoint.

    For the reranker, ``embedder`` is the same-stage embedder checkpoint used
    both for mining and for the cosine cross feature. ``mining_log``, when
    given, collects {query key -> mined ids} per mining pass.
    """
    if component not in ("embedder", "reranker"):
        raise CurriculumError(f"unknown component {component!r}")
    if prev.stage != StageTag(plan.stage - 1):
        raise StageOrderError(
            f"stage-order violation: expected a {StageTag(plan.stage - 1).name} "
            f"checkpoint, found {prev.stage.name}"
        )
    cfg = config or CurriculumConfig(seed=seed)
    mining = MiningConfig(
        band_lo=cfg.mining.band_lo,
        band_hi=cfg.mining.band_hi,
        per_query=cfg.mining.per_query,
        seed=mix_seed(seed, int(plan.stage), 0xA5),
    )

    def log_mined(examples: list[TrainingExample]) -> None:
        if mining_log is not None:
            mining_log.append(
                {
                    ex.query_id or f"ex:{ex.positive_id}": list(ex.hard_negative_ids)
                    for ex in examples
                }
            )

    if component == "embedder":
        ckpt = prev
        if plan.data_source == "weak_pairs":
            examples = generate_weak_pairs(
                corpus, cfg.weak_pair_count, mix_seed(seed, int(plan.stage), 1)
            )
            for epoch in range(plan.epochs):
                ckpt = encoder.train_epoch(
                    ckpt,
                    examples,
                    corpus,
                    TrainConfig(
                        plan.learning_rate,
                        mix_seed(seed, int(plan.stage), 2, epoch),
                        cfg.tau,
                        cfg.batch_size,
                    ),
                )
        else:
            if plan.data_source == "filtered_mined_pairs":
                queries = filter_stage3_queries(queries, qrels)
            base_examples = _stage_examples_from_queries(queries, qrels, plan.stage)
            if not base_examples:
                raise CurriculumError("no judged queries to train on")
            if plan.refresh_negatives_each_epoch:
                for epoch in range(plan.epochs):
                    index = build_index(ckpt, corpus)
                    examples = attach_negatives(
                        base_examples, ckpt, index, qrels, mining
                    )
                    log_mined(examples)
                    ckpt = encoder.train_epoch(
                        ckpt,
                        examples,
                        corpus,
                        TrainConfig(
                            plan.learning_rate,
                            mix_seed(seed, int(plan.stage), 2, epoch),
                            cfg.tau,
                            cfg.batch_size,
                        ),
                    )
            else:
                index = build_index(prev, corpus)
                examples = attach_negatives(base_examples, prev, index, qrels, mining)
                log_mined(examples)
                for epoch in range(plan.epochs):
                    ckpt = encoder.train_epoch(
                        ckpt,
                        examples,
                        corpus,
                        TrainConfig(
                            plan.learning_rate,
                            mix_seed(seed, int(plan.stage), 2, epoch),
                            cfg.tau,
                            cfg.batch_size,
                        ),
                    )
        from dataclasses import replace

        return replace(ckpt, stage=plan.stage)

    # reranker: mined pairs built with the same-stage embedder
    if embedder is None:
        raise CurriculumError("reranker stages require the same-stage embedder")
    if plan.data_source == "weak_pairs":
        base_examples = generate_weak_pairs(
            corpus, cfg.weak_pair_count, mix_seed(seed, int(plan.stage), 1)
        )
    else:
        if plan.data_source == "filtered_mined_pairs":
            queries = filter_stage3_queries(queries, qrels)
        base_examples = _stage_examples_from_queries(queries, qrels, plan.stage)
        if not base_examples:
            raise CurriculumError("no judged queries to train on")
    index = build_index(embedder, corpus)
    examples = attach_negatives(base_examples, embedder, index, qrels, mining)
    examples = [ex for ex in examples if ex.hard_negative_ids]
    if not examples:
        raise CurriculumError("mining produced no negatives for any example")
    log_mined(examples)
    ckpt = prev
    for epoch in range(plan.epochs):
        ckpt = reranker.train_epoch(
            ckpt,
            examples,
            corpus,
            embedder,
            RerankTrainConfig(
                plan.learning_rate, mix_seed(seed, int(plan.stage), 3, epoch)
            ),
        )
    from dataclasses import replace

    return replace(ckpt, stage=plan.stage, embedder_ref=embedder.ckpt_id)


def _embedder_metrics(
    ckpt: EmbedderCheckpoint,
    index: Index,
    queries: QuerySet,
    qrels: Qrels,
    cfg: CurriculumConfig,
) -> dict[str, float]:
    curve = sweep_recall_budget(ckpt, index, queries, qrels, cfg.eval_ks)
    return {f"recall@{k}": v for k, v in curve.points}


def _reranker_metrics(
    rr: RerankerCheckpoint,
    emb: EmbedderCheckpoint,
    index: Index,
    corpus: Corpus,
    queries: QuerySet,
    qrels: Qrels,
    cfg: CurriculumConfig,
) -> dict[str, float]:
    """MRR / nDCG of reranking the same-stage embedder's candidates."""
    import numpy as np

    stats = corpus.stats()
    w = np.asarray(rr.weights, dtype=np.float64)
    # doc embeddings come straight from the index columns
    emb_cache = {
        corpus[did].text: index.matrix[:, i] for i, did in enumerate(index.doc_ids)
    }
    run: dict[str, list[str]] = {}
    for q in queries:
        if not qrels.has_judgments(q.id):
            continue
        cands = retrieve(index, encoder.embed(emb, q.text), cfg.eval_k_candidates)
        scored = [
            (
                did,
                float(
                    w
                    @ cross_features_text(
                        q.text, corpus[did].text, emb, stats, emb_cache
                    )
                ),
            )
            for did, _ in cands
        ]
        scored.sort(key=lambda t: (-t[1], t[0]))
        run[q.id] = [d for d, _ in scored]
    values, _, _ = evaluate_run(run, qrels, ks=(), cutoff=cfg.ndcg_cutoff)
    return {"mrr": values["mrr"], f"ndcg@{cfg.ndcg_cutoff}": values[f"ndcg@{cfg.ndcg_cutoff}"]}


def run_curriculum(
    corpus: Corpus,
    queries: QuerySet,
    qrels: Qrels,
    config: CurriculumConfig,
    out_dir: str | Path,
    eval_queries: QuerySet | None = None,
    eval_qrels: Qrels | None = None,
) -> CheckpointRegistry:
    """Full three-stage run for both components.

    Writes the eight checkpoints and the registry manifest into ``out_dir``
    and returns the in-memory registry. Fully deterministic in config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ev_q = eval_queries if eval_queries is not None else queries
    ev_r = eval_qrels if eval_qrels is not None else qrels
    registry = CheckpointRegistry()

    emb_ckpts: dict[StageTag, EmbedderCheckpoint] = {}
    emb = encoder.init_embedder(mix_seed(config.seed, 0xE))
    emb_ckpts[StageTag.Base] = emb
    for stage in (StageTag.Stage1, StageTag.Stage2, StageTag.Stage3):
        emb = run_stage(
            config.plans[stage],
            "embedder",
            emb,
            corpus,
            queries,
            qrels,
            config.seed,
            config=config,
        )
        emb_ckpts[stage] = emb

    indexes: dict[StageTag, Index] = {}
    for stage, ckpt in emb_ckpts.items():
        path = out / f"embedder_{stage.name.lower()}.ckpt"
        save_checkpoint(ckpt, path)
        indexes[stage] = build_index(ckpt, corpus)
        registry.add(
            RegistryEntry(
                component="embedder",
                stage=stage,
                path=str(path),
                ckpt_id=ckpt.ckpt_id,
                seed=config.seed,
                metrics=_embedder_metrics(ckpt, indexes[stage], ev_q, ev_r, config),
            )
        )

    rr_ckpts: dict[StageTag, RerankerCheckpoint] = {}
    rr = reranker.init_reranker(
        mix_seed(config.seed, 0x12), emb_ckpts[StageTag.Base].ckpt_id
    )
    rr_ckpts[StageTag.Base] = rr
    for stage in (StageTag.Stage1, StageTag.Stage2, StageTag.Stage3):
        rr = run_stage(
            config.plans[stage],
            "reranker",
            rr,
            corpus,
            queries,
            qrels,
            config.seed,
            config=config,
            embedder=emb_ckpts[stage],
        )
        rr_ckpts[stage] = rr

    for stage, ckpt in rr_ckpts.items():
        path = out / f"reranker_{stage.name.lower()}.ckpt"
        save_checkpoint(ckpt, path)
        registry.add(
            RegistryEntry(
                component="reranker",
                stage=stage,
                path=str(path),
                ckpt_id=ckpt.ckpt_id,
                seed=config.seed,
                metrics=_reranker_metrics(
                    ckpt, emb_ckpts[stage], indexes[stage], corpus, ev_q, ev_r, config
                ),
            )
        )

    registry.save(out / "registry.json")
    return registry
