# GElo pipeline - stage protocol
# core/pipeline/base.py

"""
BaseStage: abstract base class for the pipeline stages.

Every stage (ingest, rate, graph, walk, train, adjust) inherits from BaseStage
and provides:
1. InputSchema: a Pydantic model describing the stage inputs
2. execute(): the stage logic
3. Metadata: name, description

run() validates the inputs, times execute() and wraps the outcome in a
StageResult; failures of known kinds become unsuccessful results instead of
exceptions so callers can attach the stage label.
"""

from __future__ import annotations

import logging
import time
from abc import ABC, abstractmethod
from typing import Any, Dict, Generic, Optional, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field

from core.errors import GeloError, StageError

logger = logging.getLogger(__name__)


class StageResult(BaseModel):
    """
    Standardised stage outcome.

    Attributes:
        success: whether the stage completed
        data: stage output (if successful)
        error: error message (if failed)
        execution_time_ms: wall time of execute()
        metadata: extra figures for logs and reports
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    success: bool = True
    data: Optional[Any] = None
    error: Optional[str] = None
    execution_time_ms: Optional[float] = None
    metadata: Dict[str, Any] = Field(default_factory=dict)

    def unwrap(self, stage: str) -> Any:
        """Return ``data`` or raise StageError labelled with ``stage``."""
        if not self.success:
            raise StageError(stage, self.error or "stage failed")
        return self.data


TInput = TypeVar("TInput", bound=BaseModel)


class BaseStage(ABC, Generic[TInput]):
    """
    Abstract pipeline stage.

    Example:
        class GraphStage(BaseStage[GraphInput]):
            name = "graph"
            description = "Build the skill gap graph"
            InputSchema = GraphInput

            def execute(self, params: GraphInput) -> StageResult:
                return StageResult(data=build_graph(params.dataset))
    """

    name: str = ""
    description: str = ""
    InputSchema: Type[TInput] = None  # type: ignore

    def __init__(self):
        self._validate_metadata()

    def _validate_metadata(self) -> None:
        if not self.name:
            raise ValueError(f"{self.__class__.__name__} must define 'name' attribute")
        if not self.description:
            raise ValueError(f"{self.__class__.__name__} must define 'description' attribute")
        if self.InputSchema is None:
            raise ValueError(f"{self.__class__.__name__} must define 'InputSchema' class attribute")

    @abstractmethod
    def execute(self, params: TInput) -> StageResult:
        """
        Run the stage on validated inputs.

        Domain errors should propagate; run() turns them into a failed result.
        """

    def validate_input(self, raw_input: Dict[str, Any]) -> TInput:
        return self.InputSchema.model_validate(raw_input)

    def run(self, raw_input: Dict[str, Any]) -> StageResult:
        """Validate, execute and time the stage."""
        start_time = time.perf_counter()
        try:
            params = self.validate_input(raw_input)
            result = self.execute(params)
        except (GeloError, ValueError, OSError) as e:
            elapsed = (time.perf_counter() - start_time) * 1000
            logger.debug(f"Stage {self.name} failed after {elapsed:.1f} ms", exc_info=True)
            return StageResult(success=False, error=str(e), execution_time_ms=elapsed)
        result.execution_time_ms = (time.perf_counter() - start_time) * 1000
        logger.debug(f"Stage {self.name} finished in {result.execution_time_ms:.1f} ms")
        return result

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__}(name={self.name})>"

    def __str__(self) -> str:
        return f"{self.name}: {self.description}"
