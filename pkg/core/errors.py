"""
Exception hierarchy for the GElo engine.

All domain errors derive from GeloError so the CLI can report them uniformly.
Most also subclass ValueError: they signal bad input, not broken state.
"""

from __future__ import annotations

from typing import Optional


class GeloError(Exception):
    """Base class for every error raised by the engine."""


class ConfigError(GeloError, ValueError):
    """Invalid configuration key or value."""


class MatchParseError(GeloError, ValueError):
    """A match file row could not be parsed."""

    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class DatasetError(GeloError, ValueError):
    """Dataset cannot be windowed or is otherwise unusable."""


class RatingError(GeloError, ValueError):
    """Non-finite rating input."""


class GraphError(GeloError, KeyError):
    """Unknown node or malformed graph query."""

    def __str__(self) -> str:
        # KeyError quotes its message, which reads badly on the console
        return str(self.args[0]) if self.args else ""


class EmbeddingError(GeloError, ValueError):
    """Embedding configuration, lookup or training failure."""


class AdjustmentError(GeloError, ValueError):
    """GElo post-adjustment cannot be applied."""


class StatsError(GeloError, ValueError):
    """Statistical test preconditions violated."""


class SimulationError(GeloError, ValueError):
    """Synthetic dataset specification is infeasible."""


class StageError(GeloError):
    """A pipeline stage failed; carries the stage label."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")
