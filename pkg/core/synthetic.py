"""
Synthetic match histories with known latent skills.

Outcomes follow the same logistic curve as Elo's expectation, so Elo is
well-specified on the data. Most players are low-activity: they enter the
timeline at a random match, play at most ``low_activity_budget`` matches and
are novices whose latent skill is shifted by ``low_activity_skill_offset``
(300 points down by default), while their few-match ratings stay close to
the initial score.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.elo import DEFAULT_SCORE, expected_win_rate
from core.errors import SimulationError
from core.match_data import Dataset, MatchRecord, PlayerId, Side

logger = logging.getLogger(__name__)


class SyntheticSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    player_count: int = Field(default=200, ge=0)
    match_count: int = Field(default=5000, ge=0)
    skill_mean: float = DEFAULT_SCORE
    skill_sd: float = Field(default=200.0, ge=0.0)
    low_activity_fraction: float = Field(default=0.8, ge=0.0, le=1.0)
    low_activity_budget: int = Field(default=8, ge=1)
    low_activity_skill_offset: float = -300.0
    units: int = Field(default=13, ge=1)
    seed: int = Field(default=7, ge=0)
    skills: Optional[tuple[float, ...]] = Field(default=None, description="Explicit latent skills, one per player")

    @model_validator(mode="after")
    def _check(self) -> "SyntheticSpec":
        if self.skills is not None and len(self.skills) != self.player_count:
            raise ValueError(f"skills lists {len(self.skills)} values for {self.player_count} players")
        return self

    @property
    def low_activity_count(self) -> int:
        return int(round(self.low_activity_fraction * self.player_count))


class SyntheticResult(BaseModel):
    """Generated dataset plus the ground truth behind it."""
    model_config = ConfigDict(frozen=True)

    dataset: Dataset
    skills: dict[PlayerId, float]
    low_activity: frozenset[PlayerId]


def _player_ids(n: int) -> list[PlayerId]:
    width = max(4, len(str(max(n - 1, 0))))
    return [f"p{i:0{width}d}" for i in range(n)]


def _check_feasible(spec: SyntheticSpec) -> None:
    if spec.match_count == 0:
        return
    if spec.player_count < 2:
        raise SimulationError(f"{spec.match_count} matches need at least 2 players, got {spec.player_count}")
    n_low = spec.low_activity_count
    n_high = spec.player_count - n_low
    if n_high >= 2:
        return
    capacity = n_low * spec.low_activity_budget
    limit = capacity // 2 if n_high == 0 else capacity
    if spec.match_count > limit:
        raise SimulationError(
            f"activity budgets allow at most {limit} matches with {n_high} regular players, "
            f"{spec.match_count} requested"
        )


def simulate(spec: SyntheticSpec) -> SyntheticResult:
    """
    Sample ``spec.match_count`` 1v1 matches.

    Each match draws two distinct players uniformly among the eligible ones
    (regulars, plus low-activity players who have entered and still have
    budget). Timestamps are time-unit ordinals ``i * units // match_count``.

    Raises:
        SimulationError: budgets cannot supply the requested matches.
    """
    _check_feasible(spec)
    rng = np.random.default_rng(spec.seed)
    ids = _player_ids(spec.player_count)

    if spec.skills is not None:
        theta = np.asarray(spec.skills, dtype=np.float64)
    else:
        theta = rng.normal(spec.skill_mean, spec.skill_sd, size=spec.player_count)
    low_idx = np.sort(rng.permutation(spec.player_count)[:spec.low_activity_count])
    if spec.skills is None:
        theta[low_idx] += spec.low_activity_skill_offset
    entry = rng.integers(0, max(spec.match_count, 1), size=len(low_idx))

    budget = np.full(spec.player_count, -1, dtype=np.int64)  # -1: unlimited
    budget[low_idx] = spec.low_activity_budget
    arrivals = sorted(zip(entry.tolist(), low_idx.tolist()))
    low_set = set(low_idx.tolist())
    eligible = [i for i in range(spec.player_count) if i not in low_set]
    next_arrival = 0

    matches: list[MatchRecord] = []
    for m in range(spec.match_count):
        while next_arrival < len(arrivals) and arrivals[next_arrival][0] <= m:
            eligible.append(arrivals[next_arrival][1])
            next_arrival += 1
        if len(eligible) < 2:
            raise SimulationError(f"activity budgets exhausted after {m} of {spec.match_count} matches")

        i, j = rng.choice(len(eligible), size=2, replace=False)
        a, b = eligible[i], eligible[j]
        winner = Side.A if rng.random() < expected_win_rate(theta[a], theta[b]) else Side.B
        matches.append(MatchRecord(
            timestamp=m * spec.units // spec.match_count,
            side_a=(ids[a],),
            side_b=(ids[b],),
            winner=winner,
        ))

        for p in (a, b):
            if budget[p] > 0:
                budget[p] -= 1
                if budget[p] == 0:
                    eligible.remove(p)

    ds = Dataset.from_matches(matches)
    logger.info(f"Simulated {len(ds)} matches over {len(ds.players)} players "
                f"({len(low_idx)} low-activity, seed {spec.seed})")
    return SyntheticResult(
        dataset=ds,
        skills={ids[i]: float(theta[i]) for i in range(spec.player_count)},
        low_activity=frozenset(ids[i] for i in low_idx.tolist()),
    )


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Synthetic Dataset for ``spec``; deterministic per seed."""
    return simulate(spec).dataset


__all__ = ["SyntheticSpec", "SyntheticResult", "simulate", "generate_synthetic"]
