"""
Match data model, ingestion and time windowing.

Match file format (UTF-8, one match per line):

    timestamp,side_a,side_b,winner

Sides are ``;``-joined player ids, winner is ``A`` or ``B``. An optional header
line is recognised by a non-numeric first field. Draws (``D``/``draw``) and
rows with a player on both sides are skipped and counted, never fatal.
"""

from __future__ import annotations

import logging
from collections import Counter
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, TextIO, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import DatasetError, MatchParseError

logger = logging.getLogger(__name__)

# Player ids are opaque, case-sensitive tokens
PlayerId = str

HEADER = ("timestamp", "side_a", "side_b", "winner")
DRAW_MARKERS = {"D", "DRAW"}


class Side(str, Enum):
    """Winning side of a match."""
    A = "A"
    B = "B"


class MatchFileFormat(BaseModel):
    """Delimiters of the match file format."""
    model_config = ConfigDict(frozen=True)

    field_delimiter: str = Field(default=",", min_length=1, max_length=1)
    team_delimiter: str = Field(default=";", min_length=1, max_length=1)

    @model_validator(mode="after")
    def _distinct(self) -> "MatchFileFormat":
        if self.field_delimiter == self.team_delimiter:
            raise ValueError("field and team delimiters must differ")
        return self


class MatchRecord(BaseModel):
    """One dated match between two sides."""
    model_config = ConfigDict(frozen=True)

    timestamp: int = Field(ge=0)
    side_a: tuple[PlayerId, ...]
    side_b: tuple[PlayerId, ...]
    winner: Side

    @model_validator(mode="after")
    def _check_sides(self) -> "MatchRecord":
        for label, side in (("side_a", self.side_a), ("side_b", self.side_b)):
            if not side:
                raise ValueError(f"{label} is empty")
            if any(not pid for pid in side):
                raise ValueError(f"{label} contains an empty player id")
            if len(set(side)) != len(side):
                raise ValueError(f"{label} lists a player twice")
        if set(self.side_a) & set(self.side_b):
            raise ValueError("a player appears on both sides")
        return self

    @property
    def winners(self) -> tuple[PlayerId, ...]:
        return self.side_a if self.winner is Side.A else self.side_b

    @property
    def losers(self) -> tuple[PlayerId, ...]:
        return self.side_b if self.winner is Side.A else self.side_a

    @property
    def players(self) -> tuple[PlayerId, ...]:
        return self.side_a + self.side_b


class Dataset(BaseModel):
    """
    Matches sorted ascending by timestamp (stable), plus ingestion skip counts.

    Build through ``Dataset.from_matches`` so sorting is applied; direct
    construction validates that the order already holds.
    """
    model_config = ConfigDict(frozen=True)

    matches: tuple[MatchRecord, ...] = ()
    skipped: dict[str, int] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_sorted(self) -> "Dataset":
        for prev, cur in zip(self.matches, self.matches[1:]):
            if cur.timestamp < prev.timestamp:
                raise ValueError("matches must be sorted by timestamp")
        return self

    @classmethod
    def from_matches(cls, matches: Iterable[MatchRecord], skipped: Optional[dict[str, int]] = None) -> "Dataset":
        # sorted() is stable: equal timestamps keep input order
        ordered = tuple(sorted(matches, key=lambda m: m.timestamp))
        return cls(matches=ordered, skipped=dict(skipped or {}))

    @cached_property
    def players(self) -> frozenset[PlayerId]:
        return frozenset(pid for m in self.matches for pid in m.players)

    def __len__(self) -> int:
        return len(self.matches)

    @property
    def skipped_total(self) -> int:
        return sum(self.skipped.values())

    def match_counts(self) -> Counter[PlayerId]:
        """Number of matches each player took part in."""
        counts: Counter[PlayerId] = Counter()
        for m in self.matches:
            counts.update(m.players)
        return counts


class WindowSplit(BaseModel):
    """One sliding window: earlier units train, later units test."""
    model_config = ConfigDict(frozen=True)

    train: Dataset
    test: Dataset
    window_index: int = Field(ge=1)

    @model_validator(mode="after")
    def _check_order(self) -> "WindowSplit":
        if self.train.matches and self.test.matches:
            if self.train.matches[-1].timestamp >= self.test.matches[0].timestamp:
                raise ValueError("test timestamps must exceed train timestamps")
        return self


# ==================== Parsing ====================

def _is_numeric(field: str) -> bool:
    field = field.strip()
    if field.startswith(("-", "+")):
        field = field[1:]
    return field.isdigit()


def _split_side(raw: str, fmt: MatchFileFormat, line_no: int, label: str) -> tuple[PlayerId, ...]:
    raw = raw.strip()
    if not raw:
        raise MatchParseError(f"empty {label}", line_no)
    ids = tuple(pid.strip() for pid in raw.split(fmt.team_delimiter))
    if any(not pid for pid in ids):
        raise MatchParseError(f"empty player id in {label}", line_no)
    return ids


def parse_matches(source: Union[TextIO, Iterable[str]], fmt: Optional[MatchFileFormat] = None) -> Dataset:
    """
    Parse a match file into a Dataset.

    Raises:
        MatchParseError: wrong column count, empty side, bad timestamp or winner.
    """
    fmt = fmt or MatchFileFormat()
    matches: list[MatchRecord] = []
    skipped: Counter[str] = Counter()
    seen_content = False

    for line_no, line in enumerate(source, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        fields = line.split(fmt.field_delimiter)

        if not seen_content:
            seen_content = True
            if not _is_numeric(fields[0]):
                logger.debug(f"Header detected on line {line_no}: {line!r}")
                continue

        if len(fields) != 4:
            raise MatchParseError(f"expected 4 columns, found {len(fields)}", line_no)
        raw_ts, raw_a, raw_b, raw_winner = fields

        if not _is_numeric(raw_ts):
            raise MatchParseError(f"timestamp is not an integer: {raw_ts!r}", line_no)
        timestamp = int(raw_ts)
        if timestamp < 0:
            raise MatchParseError(f"timestamp must be >= 0, got {timestamp}", line_no)

        side_a = _split_side(raw_a, fmt, line_no, "side_a")
        side_b = _split_side(raw_b, fmt, line_no, "side_b")

        winner = raw_winner.strip().upper()
        if winner in DRAW_MARKERS:
            skipped["draw"] += 1
            continue
        if winner not in (Side.A.value, Side.B.value):
            raise MatchParseError(f"winner must be A or B, got {raw_winner.strip()!r}", line_no)

        if len(set(side_a)) != len(side_a) or len(set(side_b)) != len(side_b):
            skipped["duplicate_member"] += 1
            continue
        if set(side_a) & set(side_b):
            skipped["self_play"] += 1
            continue

        matches.append(MatchRecord(timestamp=timestamp, side_a=side_a, side_b=side_b, winner=Side(winner)))

    if skipped:
        logger.warning(f"Skipped {sum(skipped.values())} rows: {dict(skipped)}")
    ds = Dataset.from_matches(matches, skipped=dict(skipped))
    logger.info(f"Parsed {len(ds)} matches, {len(ds.players)} players")
    return ds


def read_matches(path: Union[str, Path], fmt: Optional[MatchFileFormat] = None) -> Dataset:
    """Parse a match file from disk (universal newlines, UTF-8)."""
    with open(path, "r", encoding="utf-8") as f:
        return parse_matches(f, fmt)


def serialize_matches(ds: Dataset, sink: TextIO, fmt: Optional[MatchFileFormat] = None) -> None:
    """Write ``ds`` in the match file format, header included."""
    fmt = fmt or MatchFileFormat()
    sink.write(fmt.field_delimiter.join(HEADER) + "\n")
    for m in ds.matches:
        row = (
            str(m.timestamp),
            fmt.team_delimiter.join(m.side_a),
            fmt.team_delimiter.join(m.side_b),
            m.winner.value,
        )
        sink.write(fmt.field_delimiter.join(row) + "\n")


# ==================== Windowing ====================

def assign_units(ds: Dataset, units: int) -> list[int]:
    """
    Map each match to a 0-based time unit by equal-width binning of the
    inclusive timestamp range.
    """
    if units < 1:
        raise DatasetError(f"units must be >= 1, got {units}")
    if not ds.matches:
        return []
    lo = ds.matches[0].timestamp
    span = ds.matches[-1].timestamp - lo + 1
    return [(m.timestamp - lo) * units // span for m in ds.matches]


def split_windows(ds: Dataset, units: int = 13, window_len: int = 4, train_len: Optional[int] = None) -> list[WindowSplit]:
    """
    Partition ``ds`` into ``units`` time units and slide a ``window_len`` window
    over them. The first ``train_len`` units (default half the window) train,
    the rest test.

    Raises:
        DatasetError: bad parameters, or a time unit ends up empty.
    """
    train_len = window_len // 2 if train_len is None else train_len
    if window_len < 2 or window_len > units:
        raise DatasetError(f"window_len must be in [2, units={units}], got {window_len}")
    if not 1 <= train_len < window_len:
        raise DatasetError(f"train_len must be in [1, {window_len - 1}], got {train_len}")
    if not ds.matches:
        raise DatasetError(f"cannot split an empty dataset into {units} time units")

    distinct = len({m.timestamp for m in ds.matches})
    if distinct < units:
        raise DatasetError(
            f"dataset has {distinct} distinct timestamps, fewer than the {units} time units requested"
        )

    unit_of = assign_units(ds, units)
    buckets: list[list[MatchRecord]] = [[] for _ in range(units)]
    for m, u in zip(ds.matches, unit_of):
        buckets[u].append(m)
    empty = [i + 1 for i, b in enumerate(buckets) if not b]
    if empty:
        raise DatasetError(f"time units {empty} contain no matches; cannot form {units} non-empty units")

    windows = []
    for k in range(units - window_len + 1):
        train = [m for b in buckets[k:k + train_len] for m in b]
        test = [m for b in buckets[k + train_len:k + window_len] for m in b]
        windows.append(WindowSplit(
            train=Dataset.from_matches(train),
            test=Dataset.from_matches(test),
            window_index=k + 1,
        ))
    logger.debug(f"Split {len(ds)} matches into {len(windows)} windows over {units} units")
    return windows


def new_players(w: WindowSplit) -> frozenset[PlayerId]:
    """Test-period players with no train-period matches."""
    return w.test.players - w.train.players


def new_player_proportion(w: WindowSplit) -> float:
    """Share of the window's players that are new in the test period."""
    everyone = w.train.players | w.test.players
    if not everyone:
        return 0.0
    return len(new_players(w)) / len(everyone)
