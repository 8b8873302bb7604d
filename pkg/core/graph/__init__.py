"""
Skill gap graph: construction, weights and random walks.
"""

from core.graph.state import EdgeStats, SkillGapGraph, edge_weight
from core.graph.builder import build_graph, export_graph, graph_summary
from core.graph.walker import WalkCorpus, export_walks, generate_walks, transition_distribution

__all__ = [
    "EdgeStats",
    "SkillGapGraph",
    "edge_weight",
    "build_graph",
    "export_graph",
    "graph_summary",
    "WalkCorpus",
    "generate_walks",
    "export_walks",
    "transition_distribution",
]
