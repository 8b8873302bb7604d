"""
Skill Gap Graph State

Data structures for the undirected weighted skill gap graph: nodes are players,
an edge records the win-loss history between two players who met across sides.
The graph is stored in a networkx Graph; this module wraps it with the
invariants the rest of the engine relies on.
"""

from __future__ import annotations

import math
from typing import Iterator

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import GraphError
from core.match_data import PlayerId

# Weight given to edges backed by a single match
SINGLE_MATCH_WEIGHT = 0.01


def edge_weight(outcome_sum: int, match_count: int) -> float:
    """
    Skill gap weight of an edge.

    1 - tanh(|sum o| / m) for m >= 2; a fixed 0.01 for a single match, which is
    far below the multi-match minimum 1 - tanh(1) so walkers rarely cross it.
    """
    if match_count < 1:
        raise GraphError(f"match_count must be >= 1, got {match_count}")
    if match_count == 1:
        return SINGLE_MATCH_WEIGHT
    return 1.0 - math.tanh(abs(outcome_sum) / match_count)


class EdgeStats(BaseModel):
    """
    Win-loss summary of one edge.

    outcome_sum is taken from the perspective of the lexicographically smaller
    endpoint; weight depends only on its magnitude.
    """
    model_config = ConfigDict(frozen=True)

    outcome_sum: int
    match_count: int = Field(ge=1)
    weight: float = Field(gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _check(self) -> "EdgeStats":
        if abs(self.outcome_sum) > self.match_count:
            raise ValueError("|outcome_sum| cannot exceed match_count")
        if (self.outcome_sum - self.match_count) % 2 != 0:
            raise ValueError("outcome_sum and match_count must share parity")
        return self

    @classmethod
    def from_outcomes(cls, outcome_sum: int, match_count: int) -> "EdgeStats":
        return cls(outcome_sum=outcome_sum, match_count=match_count,
                   weight=edge_weight(outcome_sum, match_count))


def canonical(a: PlayerId, b: PlayerId) -> tuple[PlayerId, PlayerId]:
    """Order an edge's endpoints lexicographically."""
    return (a, b) if a < b else (b, a)


class SkillGapGraph:
    """
    Undirected weighted graph over players.

    Isolated nodes are allowed (e.g. players only ever seen as teammates).
    Neighbour lists are returned sorted so walks are reproducible.
    """

    def __init__(self) -> None:
        self._g = nx.Graph()

    # ============== Construction ==============

    def add_node(self, pid: PlayerId) -> None:
        self._g.add_node(pid)

    def set_edge(self, a: PlayerId, b: PlayerId, stats: EdgeStats) -> None:
        if a == b:
            raise GraphError(f"self-loop on {a!r} is not allowed")
        self._g.add_edge(a, b, stats=stats, weight=stats.weight)

    # ============== Queries ==============

    @property
    def nx_graph(self) -> nx.Graph:
        """Underlying networkx graph (edge attrs: ``stats``, ``weight``)."""
        return self._g

    @property
    def nodes(self) -> list[PlayerId]:
        return sorted(self._g.nodes)

    def __contains__(self, pid: object) -> bool:
        return pid in self._g

    def __len__(self) -> int:
        return self._g.number_of_nodes()

    @property
    def edge_count(self) -> int:
        return self._g.number_of_edges()

    def has_edge(self, a: PlayerId, b: PlayerId) -> bool:
        return self._g.has_edge(a, b)

    def edge(self, a: PlayerId, b: PlayerId) -> EdgeStats:
        if not self._g.has_edge(a, b):
            raise GraphError(f"no edge between {a!r} and {b!r}")
        return self._g.edges[a, b]["stats"]

    def neighbors(self, v: PlayerId) -> list[tuple[PlayerId, float]]:
        """Sorted ``(neighbor, weight)`` pairs of ``v``."""
        if v not in self._g:
            raise GraphError(f"unknown node {v!r}")
        adj = self._g.adj[v]
        return [(t, adj[t]["weight"]) for t in sorted(adj)]

    def edges(self) -> Iterator[tuple[PlayerId, PlayerId, EdgeStats]]:
        """Edges in canonical order: ``a < b``, sorted by ``(a, b)``."""
        keyed = sorted(canonical(a, b) for a, b in self._g.edges)
        for a, b in keyed:
            yield a, b, self._g.edges[a, b]["stats"]

    def isolated(self) -> list[PlayerId]:
        return sorted(nx.isolates(self._g))

    def __repr__(self) -> str:
        return f"<SkillGapGraph(nodes={len(self)}, edges={self.edge_count})>"
