"""
Pipeline stages: ingest, rate, graph, walk, train, adjust.
"""

from core.pipeline.base import BaseStage, StageResult
from core.pipeline.stages import (
    AdjustStage,
    GeloRun,
    GraphStage,
    IngestStage,
    PipelineParams,
    RateStage,
    TrainStage,
    WalkStage,
    ingest,
    run_gelo,
)

__all__ = [
    "BaseStage",
    "StageResult",
    "PipelineParams",
    "GeloRun",
    "IngestStage",
    "RateStage",
    "GraphStage",
    "WalkStage",
    "TrainStage",
    "AdjustStage",
    "ingest",
    "run_gelo",
]
