"""
Simulation command: write a synthetic match file.
"""

from __future__ import annotations

import logging
from pathlib import Path

from config import load_synthetic_spec
from core.match_data import serialize_matches
from core.synthetic import SyntheticSpec, generate_synthetic

logger = logging.getLogger(__name__)


def cmd_simulate(spec_path: Path | None, out_path: Path, seed: int | None = None) -> tuple[Path, int]:
    """
    Generate the dataset described by ``spec_path`` (defaults when ``None``)
    and write it in the match file format. ``seed`` overrides the file's.
    """
    spec = load_synthetic_spec(spec_path) if spec_path is not None else SyntheticSpec()
    if seed is not None:
        spec = spec.model_copy(update={"seed": seed})
    ds = generate_synthetic(spec)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="\n") as f:
        serialize_matches(ds, f)
    logger.info(f"Wrote {len(ds)} synthetic matches to {out_path}")
    return out_path, len(ds)
