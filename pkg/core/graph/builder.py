"""
Skill Gap Graph Builder

Builds the skill gap graph from a match history.

Team matches: every (winner, loser) pair across the two sides contributes one
outcome observation; teammates are never linked. In 1v1 this is exactly one
observation per match.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from typing import TextIO

from pydantic import BaseModel

from core.graph.state import SINGLE_MATCH_WEIGHT, EdgeStats, SkillGapGraph, canonical
from core.match_data import Dataset, PlayerId

logger = logging.getLogger(__name__)


class GraphSummary(BaseModel):
    """Size figures of a skill gap graph."""
    nodes: int
    edges: int
    isolated: int
    single_match_edges: int
    matches: int

    @property
    def single_match_share(self) -> float:
        return self.single_match_edges / self.edges if self.edges else 0.0


def build_graph(ds: Dataset) -> SkillGapGraph:
    """
    Build the skill gap graph of ``ds``.

    Every player in the dataset becomes a node, including players who never
    faced anyone across sides.
    """
    # canonical pair -> [outcome_sum, match_count]
    tallies: dict[tuple[PlayerId, PlayerId], list[int]] = defaultdict(lambda: [0, 0])

    for m in ds.matches:
        for w in m.winners:
            for l in m.losers:
                key = canonical(w, l)
                tally = tallies[key]
                tally[0] += 1 if key[0] == w else -1
                tally[1] += 1

    g = SkillGapGraph()
    for pid in sorted(ds.players):
        g.add_node(pid)
    for (a, b), (outcome_sum, match_count) in sorted(tallies.items()):
        g.set_edge(a, b, EdgeStats.from_outcomes(outcome_sum, match_count))

    logger.info(f"Skill gap graph: {len(g)} nodes, {g.edge_count} edges from {len(ds)} matches")
    return g


def graph_summary(g: SkillGapGraph, matches: int = 0) -> GraphSummary:
    """Node/edge counts, isolated nodes and single-match edges."""
    single = sum(1 for _, _, s in g.edges() if s.match_count == 1)
    return GraphSummary(
        nodes=len(g),
        edges=g.edge_count,
        isolated=len(g.isolated()),
        single_match_edges=single,
        matches=matches,
    )


def export_graph(g: SkillGapGraph, sink: TextIO) -> None:
    """Write ``a<TAB>b<TAB>match_count<TAB>outcome_sum<TAB>weight`` lines."""
    for a, b, s in g.edges():
        sink.write(f"{a}\t{b}\t{s.match_count}\t{s.outcome_sum}\t{s.weight:.6f}\n")


__all__ = ["build_graph", "graph_summary", "export_graph", "GraphSummary", "SINGLE_MATCH_WEIGHT"]
