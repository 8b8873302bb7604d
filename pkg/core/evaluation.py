"""
Windowed evaluation of Elo and GElo.

For each window the ratings are trained on the first units and scored on the
rest: a test match is predicted for the side with the higher (average)
rating, then the table is updated with Elo before the next match. Rank
variation is measured per match and across the test period.
"""

from __future__ import annotations

import logging
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import rankdata

from core.elo import DEFAULT_K_FACTOR, RatingTable, replay, side_rating, update_match
from core.errors import DatasetError, StatsError
from core.match_data import Dataset, PlayerId, Side, WindowSplit, new_player_proportion
from core.pipeline.stages import PipelineParams, run_gelo

logger = logging.getLogger(__name__)


class RatingSystem(str, Enum):
    ELO = "elo"
    GELO = "gelo"


class RankMode(str, Enum):
    PER_MATCH = "per_match"
    PER_WINDOW = "per_window"


class PredictionOutcome(BaseModel):
    """Wrong predictions out of ``total``; an equal-rating tie counts 0.5."""
    model_config = ConfigDict(frozen=True)

    total: int = Field(ge=1)
    wrong: float = Field(ge=0.0)
    ties: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check(self) -> "PredictionOutcome":
        if self.wrong > self.total:
            raise ValueError("wrong predictions cannot exceed the match count")
        return self

    @property
    def error_rate(self) -> float:
        return self.wrong / self.total


class RankVariationStat(BaseModel):
    model_config = ConfigDict(frozen=True)

    per_match_avg: Optional[float] = Field(default=None, ge=0.0)
    per_window_avg: Optional[float] = Field(default=None, ge=0.0)


class WindowResult(BaseModel):
    """One (window, system, seed) evaluation."""
    model_config = ConfigDict(frozen=True)

    window_index: int
    system: RatingSystem
    seed: int = 0
    outcome: PredictionOutcome
    rank_variation: RankVariationStat
    new_player_proportion: float = 0.0
    active_players: int = 0
    timings_ms: dict[str, float] = Field(default_factory=dict)

    @property
    def error_rate(self) -> float:
        return self.outcome.error_rate


# ============== Ranks ==============

def rank_positions(scores: Mapping[PlayerId, float]) -> dict[PlayerId, int]:
    """1-based leaderboard positions; equal scores share the smallest position."""
    if not scores:
        return {}
    ids = list(scores)
    ranks = rankdata(-np.fromiter((scores[p] for p in ids), dtype=np.float64, count=len(ids)), method="min")
    return {pid: int(r) for pid, r in zip(ids, ranks)}


def _mean_rank_change(before: Mapping[PlayerId, float], after: Mapping[PlayerId, float],
                      players) -> tuple[float, int]:
    rb, ra = rank_positions(before), rank_positions(after)
    changes = [abs(rb[p] - ra[p]) for p in players if p in rb and p in ra]
    return float(sum(changes)), len(changes)


def rank_variation(
    history: Sequence[Mapping[PlayerId, float]],
    mode: RankMode = RankMode.PER_MATCH,
    participants: Optional[Sequence[Sequence[PlayerId]]] = None,
) -> RankVariationStat:
    """
    Mean absolute rank change over a sequence of score snapshots.

    PER_MATCH: averaged over each transition's participants (given, or by
    default the players whose score changed). PER_WINDOW: first against last
    snapshot over players present in both.

    Raises:
        StatsError: fewer than 2 snapshots, or a participants list of the wrong length.
    """
    if len(history) < 2:
        raise StatsError(f"rank variation needs at least 2 snapshots, got {len(history)}")
    snaps = [s.as_dict() if isinstance(s, RatingTable) else dict(s) for s in history]

    if mode is RankMode.PER_WINDOW:
        first, last = snaps[0], snaps[-1]
        total, count = _mean_rank_change(first, last, first.keys() & last.keys())
        return RankVariationStat(per_window_avg=total / count if count else 0.0)

    if participants is not None and len(participants) != len(snaps) - 1:
        raise StatsError(f"expected {len(snaps) - 1} participant lists, got {len(participants)}")
    total, count = 0.0, 0
    for i, (before, after) in enumerate(zip(snaps, snaps[1:])):
        if participants is not None:
            players = participants[i]
        else:
            players = [p for p in after if p in before and before[p] != after[p]]
        t, c = _mean_rank_change(before, after, players)
        total += t
        count += c
    return RankVariationStat(per_match_avg=total / count if count else 0.0)


# ============== Prediction ==============

def _score_test(table: RatingTable, test: Dataset, k: float, frozen: bool,
                track_ranks: bool) -> tuple[PredictionOutcome, float]:
    """Score ``test`` against ``table`` in place; returns outcome and per-match RV."""
    if not test.matches:
        raise DatasetError("cannot score an empty test period")
    wrong, ties = 0.0, 0
    rv_total, rv_count = 0.0, 0
    for m in test.matches:
        r_a, r_b = side_rating(table, m.side_a), side_rating(table, m.side_b)
        if r_a == r_b:
            wrong += 0.5
            ties += 1
        elif (r_a > r_b) != (m.winner is Side.A):
            wrong += 1.0
        if frozen:
            continue
        before = table.as_dict() if track_ranks else None
        update_match(table, m, k)
        if track_ranks:
            t, c = _mean_rank_change(before, table.as_dict(), m.players)
            rv_total += t
            rv_count += c
    outcome = PredictionOutcome(total=len(test), wrong=wrong, ties=ties)
    return outcome, (rv_total / rv_count if rv_count else 0.0)


def prediction_error(table: RatingTable, test: Dataset, k: float = DEFAULT_K_FACTOR,
                     frozen: bool = False) -> PredictionOutcome:
    """
    Fraction of test matches won by the lower-rated side.

    ``table`` is copied; new players enter at its default score. Unless
    ``frozen``, Elo updates the copy after each match is scored.

    Raises:
        DatasetError: ``test`` is empty.
    """
    outcome, _ = _score_test(table.copy(), test, k, frozen, track_ranks=False)
    return outcome


def run_window(
    w: WindowSplit,
    system: RatingSystem,
    params: Optional[PipelineParams] = None,
    frozen_test: bool = False,
    elo: Optional[RatingTable] = None,
) -> WindowResult:
    """
    Train ``system`` on ``w.train`` and score ``w.test``.

    Test-period newcomers start at the mean final training score. Testing
    always updates with Elo regardless of ``system``.
    """
    params = params or PipelineParams()
    if elo is None:
        elo = replay(w.train, params.k_factor, params.default_score)

    timings: dict[str, float] = {}
    active = 0
    if system is RatingSystem.GELO:
        run = run_gelo(w.train, params, elo=elo)
        trained = run.table
        timings = run.timings_ms
        active = run.report.active_count
    else:
        trained = elo

    start = RatingTable(trained.mean(), trained.as_dict())
    table = start.copy()
    outcome, per_match = _score_test(table, w.test, params.k_factor, frozen_test, track_ranks=True)
    per_window = rank_variation([start, table], RankMode.PER_WINDOW).per_window_avg

    logger.debug(f"Window {w.window_index} [{system.value}, seed {params.seed}]: "
                 f"error {outcome.error_rate:.4f}, RV {per_match:.2f}/{per_window:.2f}")
    return WindowResult(
        window_index=w.window_index,
        system=system,
        seed=params.seed,
        outcome=outcome,
        rank_variation=RankVariationStat(per_match_avg=per_match, per_window_avg=per_window),
        new_player_proportion=new_player_proportion(w),
        active_players=active,
        timings_ms=timings,
    )


__all__ = [
    "RatingSystem",
    "RankMode",
    "PredictionOutcome",
    "RankVariationStat",
    "WindowResult",
    "rank_positions",
    "rank_variation",
    "prediction_error",
    "run_window",
]
