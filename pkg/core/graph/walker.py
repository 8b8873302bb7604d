"""
Weighted random walks over the skill gap graph.

A walker at v moves to neighbour t with probability w_tv / sum(w_*v). Each
walk owns a generator seeded from (seed, node id, walk index), so the corpus
is identical whatever the thread count or scheduling.
"""

from __future__ import annotations

import hashlib
import logging
from bisect import bisect_right
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from itertools import accumulate
from typing import Optional, TextIO

import numpy as np

from core.errors import GraphError
from core.graph.state import SkillGapGraph
from core.match_data import PlayerId

logger = logging.getLogger(__name__)

Walk = tuple[PlayerId, ...]


class WalkCorpus:
    """Random walk sequences used as training sentences."""

    def __init__(self, walks: list[Walk], walks_per_node: int, walk_length: int):
        self.walks = walks
        self.walks_per_node = walks_per_node
        self.walk_length = walk_length
        self._counts: Optional[Counter] = None

    def __len__(self) -> int:
        return len(self.walks)

    def frequencies(self) -> Counter:
        """Occurrences of each node across all walks."""
        if self._counts is None:
            counts: Counter = Counter()
            for walk in self.walks:
                counts.update(walk)
            self._counts = counts
        return self._counts

    @property
    def vocabulary(self) -> list[PlayerId]:
        return sorted(self.frequencies())

    def __repr__(self) -> str:
        return f"<WalkCorpus(walks={len(self)}, length={self.walk_length})>"


def transition_distribution(g: SkillGapGraph, v: PlayerId) -> dict[PlayerId, float]:
    """
    Next-step probabilities from ``v``.

    Raises:
        GraphError: ``v`` is not a node of ``g``.
    """
    nbrs = g.neighbors(v)
    total = sum(w for _, w in nbrs)
    return {t: w / total for t, w in nbrs}


def node_key(pid: PlayerId) -> int:
    """Stable 64-bit integer derived from a player id."""
    return int.from_bytes(hashlib.blake2b(pid.encode("utf-8"), digest_size=8).digest(), "little")


class _Sampler:
    """Cumulative-weight tables for inverse-CDF neighbour sampling."""

    def __init__(self, g: SkillGapGraph):
        self.table: dict[PlayerId, tuple[list[PlayerId], list[float]]] = {}
        for v in g.nodes:
            nbrs = g.neighbors(v)
            self.table[v] = ([t for t, _ in nbrs], list(accumulate(w for _, w in nbrs)))

    def walk(self, start: PlayerId, length: int, rng: np.random.Generator) -> Walk:
        walk = [start]
        if not self.table[start][0]:
            # 孤立节点: 长度为 1 的游走
            return tuple(walk)
        draws = rng.random(length - 1)
        cur = start
        for u in draws:
            nbrs, cum = self.table[cur]
            idx = bisect_right(cum, u * cum[-1])
            cur = nbrs[min(idx, len(nbrs) - 1)]
            walk.append(cur)
        return tuple(walk)


def generate_walks(
    g: SkillGapGraph,
    walks_per_node: int = 16,
    walk_length: int = 100,
    seed: int = 0,
    threads: int = 1,
) -> WalkCorpus:
    """
    Generate ``walks_per_node`` walks of ``walk_length`` nodes from every node.

    The corpus is ordered pass by pass; within a pass start nodes follow a
    seeded shuffle, as DeepWalk does.
    """
    if walk_length < 1:
        raise GraphError(f"walk_length must be >= 1, got {walk_length}")
    if walks_per_node < 1:
        raise GraphError(f"walks_per_node must be >= 1, got {walks_per_node}")

    sampler = _Sampler(g)
    nodes = g.nodes

    def run(job: tuple[int, PlayerId]) -> Walk:
        walk_index, start = job
        rng = np.random.default_rng([seed, node_key(start), walk_index])
        return sampler.walk(start, walk_length, rng)

    jobs: list[tuple[int, PlayerId]] = []
    order_rng = np.random.default_rng([seed, 0x5EED])
    for walk_index in range(walks_per_node):
        for i in order_rng.permutation(len(nodes)):
            jobs.append((walk_index, nodes[i]))

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            walks = list(pool.map(run, jobs))
    else:
        walks = [run(job) for job in jobs]

    logger.info(f"Generated {len(walks)} walks (length {walk_length}) over {len(nodes)} nodes")
    return WalkCorpus(walks=walks, walks_per_node=walks_per_node, walk_length=walk_length)


def export_walks(corpus: WalkCorpus, sink: TextIO) -> None:
    """One walk per line, space-separated player ids."""
    for walk in corpus.walks:
        sink.write(" ".join(walk) + "\n")
