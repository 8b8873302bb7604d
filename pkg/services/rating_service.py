"""
Rating commands: plain Elo ratings and the full GElo pipeline.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

from pydantic import BaseModel

from config import RunConfig
from core.elo import RatingTable, export_ratings, replay
from core.embedding import read_word2vec, write_word2vec
from core.errors import EmbeddingError, StageError
from core.gelo import AdjustmentReport, export_report
from core.graph import export_graph, export_walks
from core.pipeline import GeloRun, ingest, run_gelo

logger = logging.getLogger(__name__)

RATINGS_FILE = "ratings.tsv"
GELO_RATINGS_FILE = "gelo_ratings.tsv"
EMBEDDINGS_FILE = "embeddings.txt"
REPORT_FILE = "adjustment_report.tsv"
GRAPH_FILE = "graph.tsv"
WALKS_FILE = "walks.txt"


class GeloArtifacts(BaseModel):
    ratings: Path
    embeddings: Path
    report: Path
    graph: Optional[Path] = None
    walks: Optional[Path] = None


def cmd_rate(matches_path: Path, config: RunConfig) -> tuple[Path, RatingTable]:
    """Elo replay over the whole file, written as ``player<TAB>score``."""
    ds = ingest(matches_path)
    table = replay(ds, config.k_factor, config.default_score)
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / RATINGS_FILE
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        export_ratings(table, f)
    logger.info(f"Wrote {len(table)} ratings to {path}")
    return path, table


def _load_embeddings(path: Path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return read_word2vec(f)
    except (EmbeddingError, OSError, ValueError) as e:
        raise StageError("train", f"{path}: {e}") from e


def cmd_gelo(matches_path: Path, config: RunConfig) -> tuple[GeloArtifacts, GeloRun]:
    """
    Full pipeline over the file: adjusted ratings, word2vec embeddings and the
    adjustment report. ``config.embeddings`` reuses a trained embedding file;
    ``config.export_graph`` also writes the graph and the walk corpus.

    Raises:
        StageError: labelled with the failing stage.
    """
    ds = ingest(matches_path)
    out_dir = config.out_dir
    foreign = _load_embeddings(config.embeddings) if config.embeddings is not None else None
    run = run_gelo(ds, config.pipeline_params(), embeddings=foreign)

    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = GeloArtifacts(
        ratings=out_dir / GELO_RATINGS_FILE,
        embeddings=out_dir / EMBEDDINGS_FILE,
        report=out_dir / REPORT_FILE,
    )
    with open(artifacts.ratings, "w", encoding="utf-8", newline="\n") as f:
        export_ratings(run.table, f)
    with open(artifacts.embeddings, "w", encoding="utf-8", newline="\n") as f:
        write_word2vec(run.embeddings, f)
    _write_report(run.report, artifacts.report)

    if config.export_graph:
        artifacts.graph = out_dir / GRAPH_FILE
        with open(artifacts.graph, "w", encoding="utf-8", newline="\n") as f:
            export_graph(run.graph, f)
        if run.corpus is not None:
            artifacts.walks = out_dir / WALKS_FILE
            with open(artifacts.walks, "w", encoding="utf-8", newline="\n") as f:
                export_walks(run.corpus, f)

    logger.info(f"GElo: {run.report.active_count} active players adjusted, artifacts in {out_dir}")
    return artifacts, run


def _write_report(report: AdjustmentReport, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        export_report(report, f)
