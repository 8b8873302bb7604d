"""
Classic Elo rating system, 1v1 and team vs. team.

Teams are treated as two "players": each member is updated separately against
the opposing team's average rating. All expectations in a match use the
pre-match ratings, so the result does not depend on member order.
"""

from __future__ import annotations

import logging
import math
from typing import Iterator, Mapping, Optional, Sequence, TextIO

from core.errors import RatingError
from core.match_data import Dataset, MatchRecord, PlayerId

logger = logging.getLogger(__name__)

DEFAULT_SCORE = 1500.0
DEFAULT_K_FACTOR = 50.0


class RatingTable:
    """
    Mutable map player id -> rating score.

    Looking up an unseen player returns ``default_score`` and registers them.
    """

    def __init__(self, default_score: float = DEFAULT_SCORE, ratings: Optional[Mapping[PlayerId, float]] = None):
        if not math.isfinite(default_score):
            raise RatingError(f"default score must be finite, got {default_score}")
        self.default_score = float(default_score)
        self._ratings: dict[PlayerId, float] = {}
        for pid, score in (ratings or {}).items():
            self[pid] = score

    def __getitem__(self, pid: PlayerId) -> float:
        if pid not in self._ratings:
            self._ratings[pid] = self.default_score
        return self._ratings[pid]

    def __setitem__(self, pid: PlayerId, score: float) -> None:
        if not math.isfinite(score):
            raise RatingError(f"rating for {pid!r} must be finite, got {score}")
        self._ratings[pid] = float(score)

    def __contains__(self, pid: object) -> bool:
        return pid in self._ratings

    def __len__(self) -> int:
        return len(self._ratings)

    def __iter__(self) -> Iterator[PlayerId]:
        return iter(self._ratings)

    def get(self, pid: PlayerId) -> float:
        """Look up without registering the player."""
        return self._ratings.get(pid, self.default_score)

    def items(self):
        return self._ratings.items()

    def as_dict(self) -> dict[PlayerId, float]:
        return dict(self._ratings)

    def copy(self) -> "RatingTable":
        return RatingTable(self.default_score, self._ratings)

    def mean(self) -> float:
        """Mean stored score; the default score for an empty table."""
        if not self._ratings:
            return self.default_score
        # fsum: independent of insertion order
        return math.fsum(self._ratings.values()) / len(self._ratings)

    def ranked(self) -> list[tuple[PlayerId, float]]:
        """Entries by descending score, ties by player id."""
        return sorted(self._ratings.items(), key=lambda kv: (-kv[1], kv[0]))

    def __repr__(self) -> str:
        return f"<RatingTable(players={len(self)}, default={self.default_score})>"


def expected_win_rate(r_a: float, r_b: float) -> float:
    """Expected score of a rating ``r_a`` against ``r_b`` on the logistic curve."""
    if not (math.isfinite(r_a) and math.isfinite(r_b)):
        raise RatingError(f"ratings must be finite, got {r_a}, {r_b}")
    return 1.0 / (1.0 + 10.0 ** (-(r_a - r_b) / 400.0))


def side_rating(table: RatingTable, side: Sequence[PlayerId]) -> float:
    """Team rating: arithmetic mean of its members."""
    return math.fsum(table[pid] for pid in side) / len(side)


def _check_k(k: float) -> None:
    # k == 0 is allowed: it freezes every rating
    if not math.isfinite(k) or k < 0:
        raise RatingError(f"K-factor must be a finite non-negative number, got {k}")


def update_match(table: RatingTable, m: MatchRecord, k: float = DEFAULT_K_FACTOR) -> RatingTable:
    """
    Apply one match to ``table`` in place and return it.

    Each player's expectation is computed from their own pre-match rating
    against the opposing side's pre-match average.
    """
    _check_k(k)
    avg_a = side_rating(table, m.side_a)
    avg_b = side_rating(table, m.side_b)
    winners = set(m.winners)

    updates: list[tuple[PlayerId, float]] = []
    for side, opponent_avg in ((m.side_a, avg_b), (m.side_b, avg_a)):
        for pid in side:
            r = table[pid]
            actual = 1.0 if pid in winners else 0.0
            updates.append((pid, r + k * (actual - expected_win_rate(r, opponent_avg))))

    for pid, score in updates:
        table[pid] = score
    return table


def replay(ds: Dataset, k: float = DEFAULT_K_FACTOR, default: float = DEFAULT_SCORE,
           table: Optional[RatingTable] = None) -> RatingTable:
    """Fold ``update_match`` over the dataset in timestamp order."""
    _check_k(k)
    table = table if table is not None else RatingTable(default)
    for m in ds.matches:
        update_match(table, m, k)
    logger.debug(f"Replayed {len(ds)} matches over {len(table)} players (k={k})")
    return table


def export_ratings(table: RatingTable, sink: TextIO) -> None:
    """Write ``player_id<TAB>score`` lines, highest score first, 4 decimals."""
    for pid, score in table.ranked():
        sink.write(f"{pid}\t{score:.4f}\n")
