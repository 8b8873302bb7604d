"""Shared helpers for the test suite."""

from __future__ import annotations

import pytest

from core.match_data import Dataset, MatchRecord, Side


def match(ts: int, side_a: str, side_b: str, winner: str = "A") -> MatchRecord:
    """``match(0, "a;b", "c")``: sides are ``;``-joined ids."""
    return MatchRecord(
        timestamp=ts,
        side_a=tuple(side_a.split(";")),
        side_b=tuple(side_b.split(";")),
        winner=Side(winner),
    )


def dataset(*matches: MatchRecord) -> Dataset:
    return Dataset.from_matches(matches)


@pytest.fixture
def write_file(tmp_path):
    def _write(name: str, text: str):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write
