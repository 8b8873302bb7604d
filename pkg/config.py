"""
GElo Configuration

统一配置中心:
- 环境变量 / .env 默认值 (GELO_*)
- RunConfig: 经过校验的运行参数
- key = value 配置文件 (与 RunConfig 字段同名)

优先级: 内置/环境默认值 < 配置文件 < 命令行参数
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from core.embedding import EmbeddingConfig
from core.errors import ConfigError
from core.pipeline.stages import PipelineParams
from core.synthetic import SyntheticSpec

# 加载 .env 文件
load_dotenv()


def _env_int(name: str, default: int, minimum: int = 0) -> int:
    try:
        value = int(os.getenv(name, str(default)))
        return value if value >= minimum else default
    except ValueError:
        return default


def _env_float(name: str, default: float, minimum: float = 0.0) -> float:
    try:
        value = float(os.getenv(name, str(default)))
        return value if value >= minimum else default
    except ValueError:
        return default


class Config:
    """项目级默认值 (可被 GELO_* 环境变量覆盖)"""

    # =========================================
    # Elo
    # =========================================
    K_FACTOR = _env_float("GELO_K_FACTOR", 50.0)
    DEFAULT_SCORE = _env_float("GELO_DEFAULT_SCORE", 1500.0, minimum=float("-inf"))

    # =========================================
    # 随机游走与嵌入
    # =========================================
    WALKS_PER_NODE = _env_int("GELO_WALKS_PER_NODE", 16, minimum=1)
    WALK_LENGTH = _env_int("GELO_WALK_LENGTH", 100, minimum=1)
    DIM = _env_int("GELO_DIM", 300, minimum=1)
    CONTEXT = _env_int("GELO_CONTEXT", 5, minimum=1)
    EPOCHS = _env_int("GELO_EPOCHS", 5, minimum=1)
    NEGATIVES = _env_int("GELO_NEGATIVES", 5, minimum=1)

    # =========================================
    # 评估窗口
    # =========================================
    UNITS = _env_int("GELO_UNITS", 13, minimum=1)
    WINDOW_LEN = _env_int("GELO_WINDOW_LEN", 4, minimum=2)
    SEEDS = _env_int("GELO_SEEDS", 5, minimum=1)

    # =========================================
    # 运行环境
    # =========================================
    SEED = _env_int("GELO_SEED", 0)
    THREADS = _env_int("GELO_THREADS", 1, minimum=1)
    LOG_LEVEL = os.getenv("GELO_LOG_LEVEL", "INFO").upper()
    OUTPUT_DIR = Path(os.getenv("GELO_OUTPUT_DIR", "out"))


_NONE_WORDS = {"", "none", "off", "null"}


class RunConfig(BaseModel):
    """Validated run parameters; every field can be set from a config file or a flag."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    k_factor: float = Field(default=Config.K_FACTOR, ge=0.0)
    default_score: float = Config.DEFAULT_SCORE
    walks_per_node: int = Field(default=Config.WALKS_PER_NODE, ge=1)
    walk_length: int = Field(default=Config.WALK_LENGTH, ge=1)
    dim: int = Field(default=Config.DIM, ge=1)
    context: int = Field(default=Config.CONTEXT, ge=1)
    epochs: int = Field(default=Config.EPOCHS, ge=1)
    negatives: int = Field(default=Config.NEGATIVES, ge=1)
    noise_exponent: float = Field(default=0.75, ge=0.0)
    lr_start: float = Field(default=0.025, gt=0.0)
    lr_end: float = Field(default=1e-4, gt=0.0)
    subsample: float = Field(default=0.0, ge=0.0)
    units: int = Field(default=Config.UNITS, ge=1)
    window_len: int = Field(default=Config.WINDOW_LEN, ge=2)
    train_len: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default=Config.SEED, ge=0)
    seeds: int = Field(default=Config.SEEDS, ge=1)
    recenter: bool = True
    deterministic: bool = False
    frozen_test: bool = False
    elbow_fallback: Optional[int] = Field(default=1, ge=1)
    threads: int = Field(default=Config.THREADS, ge=1)
    out_dir: Path = Config.OUTPUT_DIR
    embeddings: Optional[Path] = None
    export_graph: bool = False

    @field_validator("train_len", "elbow_fallback", "embeddings", mode="before")
    @classmethod
    def _none_words(cls, v: Any) -> Any:
        if isinstance(v, str) and v.strip().lower() in _NONE_WORDS:
            return None
        return v

    def embedding_config(self, seed: Optional[int] = None) -> EmbeddingConfig:
        """Trainer settings; deterministic mode always trains on one thread."""
        return EmbeddingConfig(
            dim=self.dim,
            context=self.context,
            epochs=self.epochs,
            negatives=self.negatives,
            lr_start=self.lr_start,
            lr_end=self.lr_end,
            noise_exponent=self.noise_exponent,
            subsample=self.subsample,
            seed=self.seed if seed is None else seed,
            deterministic=self.deterministic,
            threads=1 if self.deterministic else self.threads,
        )

    def pipeline_params(self, seed: Optional[int] = None, threads: Optional[int] = None) -> PipelineParams:
        """
        Pipeline parameters. ``threads`` caps the trainer's threads, e.g. when
        the evaluation already runs windows in parallel.
        """
        seed = self.seed if seed is None else seed
        emb = self.embedding_config(seed)
        if threads is not None:
            emb = emb.model_copy(update={"threads": min(emb.threads, threads)})
        return PipelineParams(
            k_factor=self.k_factor,
            default_score=self.default_score,
            walks_per_node=self.walks_per_node,
            walk_length=self.walk_length,
            walk_threads=self.threads if threads is None else threads,
            seed=seed,
            embedding=emb,
            recenter=self.recenter,
            elbow_fallback=self.elbow_fallback,
        )


# ==================== key = value 配置文件 ====================

def read_key_values(path: Union[str, Path]) -> dict[str, str]:
    """
    Parse ``key = value`` lines (``#`` comments) into a dict with normalised
    keys: lower case, ``-`` folded to ``_``.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = dotenv_values(path)
    values: dict[str, str] = {}
    for key, value in raw.items():
        if value is None:
            raise ConfigError(f"{path}: key {key!r} has no value")
        values[key.strip().lower().replace("-", "_")] = value.strip()
    return values


def _validate(model: type[BaseModel], data: Mapping[str, Any], source: str):
    unknown = sorted(set(data) - set(model.model_fields))
    if unknown:
        raise ConfigError(f"{source}: unknown key {unknown[0]!r}")
    try:
        return model.model_validate(dict(data))
    except ValidationError as e:
        first = e.errors()[0]
        loc = ".".join(str(p) for p in first["loc"]) or "value"
        raise ConfigError(f"{source}: {loc}: {first['msg']}") from None


def load_run_config(path: Optional[Union[str, Path]] = None,
                    overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Defaults, then the config file at ``path``, then ``overrides`` (flag
    values; ``None`` entries are ignored).

    Raises:
        ConfigError: unknown key or invalid value.
    """
    data: dict[str, Any] = {}
    source = "defaults"
    if path is not None:
        data.update(read_key_values(path))
        source = str(path)
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return _validate(RunConfig, data, source)


def load_synthetic_spec(path: Union[str, Path]) -> SyntheticSpec:
    """Read a SyntheticSpec from a ``key = value`` file; ``skills`` is comma-separated."""
    data: dict[str, Any] = dict(read_key_values(path))
    if "skills" in data:
        try:
            data["skills"] = tuple(float(v) for v in data["skills"].split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"{path}: skills must be comma-separated numbers") from None
    return _validate(SyntheticSpec, data, str(path))
