"""
GElo pipeline stages and the runner that chains them.

    ingest -> rate -> graph -> walk -> train -> adjust

A failing stage surfaces as StageError carrying its label.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from core.elo import DEFAULT_K_FACTOR, DEFAULT_SCORE, RatingTable, replay
from core.embedding import EmbeddingConfig, EmbeddingMatrix, train
from core.gelo import AdjustmentReport, gelo_adjust
from core.graph import SkillGapGraph, WalkCorpus, build_graph, generate_walks, graph_summary
from core.match_data import Dataset, MatchFileFormat, read_matches
from core.pipeline.base import BaseStage, StageResult

logger = logging.getLogger(__name__)


class PipelineParams(BaseModel):
    """Everything the rating pipeline needs besides the data."""
    model_config = ConfigDict(frozen=True)

    k_factor: float = Field(default=DEFAULT_K_FACTOR, ge=0.0)
    default_score: float = DEFAULT_SCORE
    walks_per_node: int = Field(default=16, ge=1)
    walk_length: int = Field(default=100, ge=1)
    walk_threads: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)
    embedding: EmbeddingConfig = Field(default_factory=EmbeddingConfig)
    recenter: bool = True
    elbow_fallback: Optional[int] = Field(default=1, ge=1)

    def with_seed(self, seed: int) -> "PipelineParams":
        """Same parameters, walks and embeddings reseeded."""
        return self.model_copy(update={
            "seed": seed,
            "embedding": self.embedding.model_copy(update={"seed": seed}),
        })


# ============== Stages ==============

class _Input(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)


class IngestInput(_Input):
    path: Path
    fmt: MatchFileFormat = Field(default_factory=MatchFileFormat)


class IngestStage(BaseStage[IngestInput]):
    name = "ingest"
    description = "Parse a match file into a sorted Dataset"
    InputSchema = IngestInput

    def execute(self, params: IngestInput) -> StageResult:
        ds = read_matches(params.path, params.fmt)
        return StageResult(data=ds, metadata={"matches": len(ds), "skipped": dict(ds.skipped)})


class RateInput(_Input):
    dataset: Dataset
    k_factor: float = DEFAULT_K_FACTOR
    default_score: float = DEFAULT_SCORE


class RateStage(BaseStage[RateInput]):
    name = "rate"
    description = "Replay the matches through Elo"
    InputSchema = RateInput

    def execute(self, params: RateInput) -> StageResult:
        return StageResult(data=replay(params.dataset, params.k_factor, params.default_score))


class GraphInput(_Input):
    dataset: Dataset


class GraphStage(BaseStage[GraphInput]):
    name = "graph"
    description = "Build the skill gap graph"
    InputSchema = GraphInput

    def execute(self, params: GraphInput) -> StageResult:
        g = build_graph(params.dataset)
        summary = graph_summary(g, len(params.dataset))
        return StageResult(data=g, metadata=summary.model_dump())


class WalkInput(_Input):
    graph: SkillGapGraph
    walks_per_node: int = 16
    walk_length: int = 100
    seed: int = 0
    threads: int = 1


class WalkStage(BaseStage[WalkInput]):
    name = "walk"
    description = "Sample weighted random walks from every node"
    InputSchema = WalkInput

    def execute(self, params: WalkInput) -> StageResult:
        corpus = generate_walks(params.graph, params.walks_per_node, params.walk_length,
                                seed=params.seed, threads=params.threads)
        return StageResult(data=corpus, metadata={"walks": len(corpus)})


class TrainInput(_Input):
    corpus: WalkCorpus
    config: EmbeddingConfig = Field(default_factory=EmbeddingConfig)


class TrainStage(BaseStage[TrainInput]):
    name = "train"
    description = "Train Skip-gram embeddings on the walk corpus"
    InputSchema = TrainInput

    def execute(self, params: TrainInput) -> StageResult:
        mat = train(params.corpus, params.config)
        return StageResult(data=mat, metadata={"rows": len(mat), "dim": mat.dim})


class AdjustInput(_Input):
    dataset: Dataset
    table: RatingTable
    embeddings: EmbeddingMatrix
    k_factor: float = DEFAULT_K_FACTOR
    recenter: bool = True
    elbow_fallback: Optional[int] = 1


class AdjustStage(BaseStage[AdjustInput]):
    name = "adjust"
    description = "Apply GElo bonus points to active players"
    InputSchema = AdjustInput

    def execute(self, params: AdjustInput) -> StageResult:
        adjusted, report = gelo_adjust(params.dataset, params.table, params.embeddings,
                                       k=params.k_factor, recenter=params.recenter,
                                       elbow_fallback=params.elbow_fallback)
        return StageResult(data=(adjusted, report), metadata={"active": report.active_count})


# ============== Runner ==============

class GeloRun(BaseModel):
    """Artifacts of one pipeline run."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    elo: RatingTable
    table: RatingTable
    graph: SkillGapGraph
    corpus: Optional[WalkCorpus] = None
    embeddings: EmbeddingMatrix
    report: AdjustmentReport
    timings_ms: dict[str, float] = Field(default_factory=dict)


def ingest(path: Path, fmt: Optional[MatchFileFormat] = None) -> Dataset:
    result = IngestStage().run({"path": path, "fmt": fmt or MatchFileFormat()})
    return result.unwrap(IngestStage.name)


def run_gelo(ds: Dataset, params: Optional[PipelineParams] = None,
             embeddings: Optional[EmbeddingMatrix] = None,
             elo: Optional[RatingTable] = None) -> GeloRun:
    """
    Rate ``ds`` with Elo and apply the GElo adjustment.

    ``embeddings`` skips walking and training (e.g. a loaded word2vec file);
    ``elo`` reuses an existing replay of ``ds``.

    Raises:
        StageError: labelled with the failing stage.
    """
    params = params or PipelineParams()
    timings: dict[str, float] = {}

    def step(stage: BaseStage, **inputs):
        result = stage.run(inputs)
        timings[stage.name] = result.execution_time_ms or 0.0
        return result.unwrap(stage.name)

    if elo is None:
        elo = step(RateStage(), dataset=ds, k_factor=params.k_factor, default_score=params.default_score)
    graph = step(GraphStage(), dataset=ds)
    corpus = None
    if embeddings is None:
        corpus = step(WalkStage(), graph=graph, walks_per_node=params.walks_per_node,
                      walk_length=params.walk_length, seed=params.seed, threads=params.walk_threads)
        embeddings = step(TrainStage(), corpus=corpus, config=params.embedding)
    table, report = step(AdjustStage(), dataset=ds, table=elo, embeddings=embeddings,
                         k_factor=params.k_factor, recenter=params.recenter,
                         elbow_fallback=params.elbow_fallback)

    logger.debug("Stage timings: " + ", ".join(f"{k}={v:.1f}ms" for k, v in timings.items()))
    return GeloRun(elo=elo, table=table, graph=graph, corpus=corpus, embeddings=embeddings,
                   report=report, timings_ms=timings)
