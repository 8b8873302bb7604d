"""
GElo post-adjustment of Elo rating scores.

Active players (match count at or above the elbow of the activity histogram)
receive bonus points k * Sim_top(i), where Sim_top measures how close a
player's embedding sits to the top-rated active player relative to the
bottom-rated one. Inactive players keep their Elo score; an optional uniform
shift restores the population mean afterwards.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from typing import Optional, TextIO

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.elo import DEFAULT_K_FACTOR, RatingTable
from core.embedding import EmbeddingMatrix, cosm
from core.errors import AdjustmentError
from core.match_data import Dataset, PlayerId

logger = logging.getLogger(__name__)

# Below this the top-bottom normaliser is treated as vanished
NORMALIZER_EPS = 1e-12


# ============== Activity ==============

class ActivityHistogram(BaseModel):
    """match count i -> number of players who played exactly i matches."""
    model_config = ConfigDict(frozen=True)

    counts: dict[int, int] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check(self) -> "ActivityHistogram":
        for i, n in self.counts.items():
            if i < 1 or n < 0:
                raise ValueError(f"invalid histogram entry {i}: {n}")
        return self

    def __getitem__(self, i: int) -> int:
        return self.counts.get(i, 0)

    @property
    def total_players(self) -> int:
        return sum(self.counts.values())

    @property
    def max_count(self) -> int:
        return max(self.counts, default=0)

    def densified(self) -> np.ndarray:
        """#M(1) .. #M(max) with zeros over gaps; index 0 holds i = 1."""
        dense = np.zeros(self.max_count, dtype=np.int64)
        for i, n in self.counts.items():
            dense[i - 1] = n
        return dense


def activity_histogram(ds: Dataset) -> ActivityHistogram:
    """Count matches per player and invert into a histogram."""
    return ActivityHistogram(counts=dict(Counter(ds.match_counts().values())))


class ElbowPoint(BaseModel):
    """Elbow threshold plus whether the small-histogram fallback was used."""
    threshold: Optional[int] = None
    fallback: bool = False


def elbow_threshold(h: ActivityHistogram, fallback: Optional[int] = 1) -> ElbowPoint:
    """
    Match count i maximising #M(i+1) + #M(i-1) - 2 #M(i) over interior i.

    Ties go to the smaller i. With fewer than three densified points the
    ``fallback`` threshold is returned instead; ``fallback=None`` yields no
    threshold at all (nobody is active).
    """
    dense = h.densified()
    if len(dense) < 3:
        logger.warning(f"Activity histogram has {len(dense)} points; elbow fallback threshold {fallback}")
        return ElbowPoint(threshold=fallback, fallback=True)
    second = dense[2:] + dense[:-2] - 2 * dense[1:-1]
    # np.argmax returns the first maximum; interior i starts at 2
    threshold = int(np.argmax(second)) + 2
    logger.info(f"Elbow threshold: {threshold} matches (#M''={int(second[threshold - 2])})")
    return ElbowPoint(threshold=threshold)


class ActiveSet(BaseModel):
    """Active players and the top/bottom benchmarks among them."""
    model_config = ConfigDict(frozen=True)

    threshold: Optional[int] = None
    members: frozenset[PlayerId] = frozenset()
    top: Optional[PlayerId] = None
    btm: Optional[PlayerId] = None
    fallback: bool = False

    @model_validator(mode="after")
    def _check(self) -> "ActiveSet":
        if self.members:
            if self.top not in self.members or self.btm not in self.members:
                raise ValueError("top and btm must be active members")
            if len(self.members) >= 2 and self.top == self.btm:
                raise ValueError("top and btm must differ when there are two or more members")
        elif self.top is not None or self.btm is not None:
            raise ValueError("an empty active set has no benchmarks")
        return self

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, pid: object) -> bool:
        return pid in self.members


def select_active(ds: Dataset, table: RatingTable, threshold: Optional[int], fallback: bool = False) -> ActiveSet:
    """
    Players with at least ``threshold`` matches in ``ds``.

    top/btm are the highest/lowest pre-adjustment ratings; equal ratings are
    ordered by player id.
    """
    if threshold is None:
        return ActiveSet(fallback=fallback)
    members = [pid for pid, n in ds.match_counts().items() if n >= threshold]
    if not members:
        return ActiveSet(threshold=threshold, fallback=fallback)
    ordered = sorted(members, key=lambda pid: (-table.get(pid), pid))
    return ActiveSet(
        threshold=threshold,
        members=frozenset(members),
        top=ordered[0],
        btm=ordered[-1],
        fallback=fallback,
    )


# ============== Similarity to top ==============

def sim_top(x_i: np.ndarray, x_top: np.ndarray, x_btm: np.ndarray) -> float:
    """
    ((cosm(i, top) + 1 - cosm(i, btm)) / 2) / cosm(btm, top).

    Not clamped: players further from the bottom than the top is score above 1.

    Raises:
        AdjustmentError: cosm(btm, top) vanishes.
    """
    norm = cosm(x_btm, x_top)
    if norm <= NORMALIZER_EPS:
        raise AdjustmentError("top and bottom embeddings are orthogonal; Sim_top is undefined")
    return ((cosm(x_i, x_top) + (1.0 - cosm(x_i, x_btm))) / 2.0) / norm


# ============== Adjustment ==============

class AdjustmentEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    player_id: PlayerId
    pre_score: float
    sim_top: Optional[float] = None
    bonus: float = 0.0
    post_score: float

    @property
    def active(self) -> bool:
        return self.sim_top is not None


class AdjustmentReport(BaseModel):
    """Per-player adjustment figures, assembled in player id order."""
    model_config = ConfigDict(frozen=True)

    entries: tuple[AdjustmentEntry, ...] = ()
    recenter_shift: float = 0.0
    k: float = DEFAULT_K_FACTOR
    threshold: Optional[int] = None
    fallback: bool = False
    top: Optional[PlayerId] = None
    btm: Optional[PlayerId] = None

    @property
    def active_count(self) -> int:
        return sum(1 for e in self.entries if e.active)

    def entry(self, pid: PlayerId) -> AdjustmentEntry:
        for e in self.entries:
            if e.player_id == pid:
                return e
        raise KeyError(pid)

    def ranked(self) -> list[AdjustmentEntry]:
        """Entries by descending post score, ties by player id."""
        return sorted(self.entries, key=lambda e: (-e.post_score, e.player_id))


def apply_adjustment(
    table: RatingTable,
    emb: EmbeddingMatrix,
    active: ActiveSet,
    k: float = DEFAULT_K_FACTOR,
    recenter: bool = True,
) -> tuple[RatingTable, AdjustmentReport]:
    """
    Add k * Sim_top(i) to every active member, top and btm included.

    Returns a new table; ``table`` is left untouched. With ``recenter`` the
    mean bonus over all players is subtracted from everyone.

    Raises:
        AdjustmentError: an active member has no embedding row, bad k, or the
            top/bottom normaliser vanishes.
    """
    if not math.isfinite(k) or k < 0:
        raise AdjustmentError(f"K-factor must be a finite non-negative number, got {k}")

    sims: dict[PlayerId, float] = {}
    if active.members:
        missing = sorted(pid for pid in active.members if pid not in emb)
        if missing:
            raise AdjustmentError(f"no embedding row for active player {missing[0]!r}"
                                  + (f" (and {len(missing) - 1} more)" if len(missing) > 1 else ""))
        x_top, x_btm = emb[active.top], emb[active.btm]
        for pid in sorted(active.members):
            sims[pid] = sim_top(emb[pid], x_top, x_btm)

    ids = sorted(set(table) | active.members)
    pre = np.array([table.get(pid) for pid in ids])
    bonus = np.array([k * sims[pid] if pid in sims else 0.0 for pid in ids])
    post = pre + bonus

    shift = 0.0
    if recenter and ids:
        shift = float(np.mean(post) - np.mean(pre))
        post = post - shift

    adjusted = RatingTable(table.default_score)
    entries = []
    for pid, r, b, p in zip(ids, pre, bonus, post):
        adjusted[pid] = float(p)
        entries.append(AdjustmentEntry(
            player_id=pid, pre_score=float(r), sim_top=sims.get(pid), bonus=float(b), post_score=float(p),
        ))

    report = AdjustmentReport(
        entries=tuple(entries),
        recenter_shift=shift,
        k=k,
        threshold=active.threshold,
        fallback=active.fallback,
        top=active.top,
        btm=active.btm,
    )
    logger.info(f"Adjusted {len(sims)} active of {len(ids)} players (k={k}, shift={shift:.4f})")
    return adjusted, report


def gelo_adjust(
    ds: Dataset,
    table: RatingTable,
    emb: EmbeddingMatrix,
    k: float = DEFAULT_K_FACTOR,
    recenter: bool = True,
    elbow_fallback: Optional[int] = 1,
) -> tuple[RatingTable, AdjustmentReport]:
    """Histogram -> elbow -> active set -> adjustment, over the rated dataset ``ds``."""
    elbow = elbow_threshold(activity_histogram(ds), fallback=elbow_fallback)
    active = select_active(ds, table, elbow.threshold, fallback=elbow.fallback)
    logger.debug(f"Active set: {len(active)} players, top={active.top}, btm={active.btm}")
    return apply_adjustment(table, emb, active, k=k, recenter=recenter)


def export_report(report: AdjustmentReport, sink: TextIO) -> None:
    """
    ``player_id<TAB>pre<TAB>sim_top<TAB>bonus<TAB>post`` rows, 4 decimals,
    highest post score first. A leading ``#`` line records the threshold and
    benchmarks; inactive players show ``-`` for sim_top.
    """
    threshold = "-" if report.threshold is None else str(report.threshold)
    sink.write(
        f"# threshold={threshold} fallback={str(report.fallback).lower()} "
        f"top={report.top or '-'} btm={report.btm or '-'} k={report.k:g} "
        f"shift={report.recenter_shift:.4f}\n"
    )
    for e in report.ranked():
        sim = "-" if e.sim_top is None else f"{e.sim_top:.4f}"
        sink.write(f"{e.player_id}\t{e.pre_score:.4f}\t{sim}\t{e.bonus:.4f}\t{e.post_score:.4f}\n")


__all__ = [
    "ActivityHistogram",
    "ActiveSet",
    "AdjustmentEntry",
    "AdjustmentReport",
    "ElbowPoint",
    "activity_histogram",
    "elbow_threshold",
    "select_active",
    "sim_top",
    "apply_adjustment",
    "gelo_adjust",
    "export_report",
]
