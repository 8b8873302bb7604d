"""
Evaluation command: Elo vs. GElo over sliding windows.

Elo is seed-independent and runs once per window; GElo runs once per seed and
its per-window error is the mean over seeds. Jobs run on a thread pool and
are merged in window order.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, TextIO

import numpy as np
from pydantic import BaseModel, Field

from config import RunConfig
from core.elo import replay
from core.errors import DatasetError
from core.evaluation import RatingSystem, WindowResult, run_window
from core.match_data import Dataset, WindowSplit, split_windows
from core.pipeline import ingest
from core.stats import PairedTestResult, mean_confidence_interval, paired_t_test

logger = logging.getLogger(__name__)

REPORT_FILE = "eval_report.tsv"
SUMMARY_FILE = "eval_summary.txt"
WINDOWS_FILE = "eval_windows.tsv"


class WindowSummary(BaseModel):
    """Both systems on one window; GElo figures averaged over seeds."""
    window_index: int
    elo_error: float
    gelo_error: float
    elo_rv_match: float
    gelo_rv_match: float
    elo_rv_window: float
    gelo_rv_window: float
    new_player_proportion: float
    test_matches: int
    active_players: float = 0.0
    walk_ms: float = 0.0
    train_ms: float = 0.0


class SystemSummary(BaseModel):
    avg: float
    ci_low: float
    ci_high: float
    rv_match: float
    rv_window: float


class EvalReport(BaseModel):
    windows: list[WindowSummary] = Field(default_factory=list)
    seeds: list[int] = Field(default_factory=list)
    elo: SystemSummary
    gelo: SystemSummary
    test: Optional[PairedTestResult] = None

    @property
    def rv_relative_change(self) -> Optional[float]:
        """(GElo - Elo) / Elo of the mean per-window rank variation."""
        if self.elo.rv_window == 0:
            return None
        return (self.gelo.rv_window - self.elo.rv_window) / self.elo.rv_window


def _summarise(window: WindowSplit, elo: WindowResult, gelo: list[WindowResult]) -> WindowSummary:
    return WindowSummary(
        window_index=window.window_index,
        elo_error=elo.error_rate,
        gelo_error=float(np.mean([r.error_rate for r in gelo])),
        elo_rv_match=elo.rank_variation.per_match_avg or 0.0,
        gelo_rv_match=float(np.mean([r.rank_variation.per_match_avg or 0.0 for r in gelo])),
        elo_rv_window=elo.rank_variation.per_window_avg or 0.0,
        gelo_rv_window=float(np.mean([r.rank_variation.per_window_avg or 0.0 for r in gelo])),
        new_player_proportion=elo.new_player_proportion,
        test_matches=len(window.test),
        active_players=float(np.mean([r.active_players for r in gelo])),
        walk_ms=float(np.mean([r.timings_ms.get("walk", 0.0) for r in gelo])),
        train_ms=float(np.mean([r.timings_ms.get("train", 0.0) for r in gelo])),
    )


def _system_summary(errors: list[float], rv_match: list[float], rv_window: list[float]) -> SystemSummary:
    avg, lo, hi = mean_confidence_interval(errors)
    return SystemSummary(avg=avg, ci_low=lo, ci_high=hi,
                         rv_match=float(np.mean(rv_match)), rv_window=float(np.mean(rv_window)))


def evaluate(ds: Dataset, config: RunConfig) -> EvalReport:
    """
    Run every window for both systems.

    Raises:
        DatasetError: too few time units for the window layout.
    """
    windows = split_windows(ds, config.units, config.window_len, config.train_len)
    seeds = [config.seed + s for s in range(config.seeds)]
    pooled = config.threads > 1
    # pooled jobs each train on one thread
    inner_threads = 1 if pooled else None
    elo_tables = {w.window_index: replay(w.train, config.k_factor, config.default_score) for w in windows}

    jobs: list[tuple[WindowSplit, RatingSystem, int]] = []
    for w in windows:
        jobs.append((w, RatingSystem.ELO, seeds[0]))
        jobs.extend((w, RatingSystem.GELO, s) for s in seeds)

    def run(job: tuple[WindowSplit, RatingSystem, int]) -> WindowResult:
        w, system, seed = job
        params = config.pipeline_params(seed=seed, threads=inner_threads)
        return run_window(w, system, params, frozen_test=config.frozen_test, elo=elo_tables[w.window_index])

    logger.info(f"Evaluating {len(windows)} windows x ({len(seeds)} GElo seeds + Elo) on {config.threads} thread(s)")
    if pooled:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]

    by_window: dict[int, tuple[Optional[WindowResult], list[WindowResult]]] = {
        w.window_index: (None, []) for w in windows
    }
    for r in results:
        elo, gelo = by_window[r.window_index]
        if r.system is RatingSystem.ELO:
            by_window[r.window_index] = (r, gelo)
        else:
            gelo.append(r)
    summaries = [_summarise(w, *by_window[w.window_index]) for w in windows]

    elo_err = [s.elo_error for s in summaries]
    gelo_err = [s.gelo_error for s in summaries]
    test = None
    if len(summaries) >= 2:
        test = paired_t_test(elo_err, gelo_err)
    else:
        logger.warning("Only one window; the paired t-test is skipped")

    report = EvalReport(
        windows=summaries,
        seeds=seeds,
        elo=_system_summary(elo_err, [s.elo_rv_match for s in summaries], [s.elo_rv_window for s in summaries]),
        gelo=_system_summary(gelo_err, [s.gelo_rv_match for s in summaries], [s.gelo_rv_window for s in summaries]),
        test=test,
    )
    logger.info(f"Mean error rate: Elo {report.elo.avg:.4f}, GElo {report.gelo.avg:.4f}")
    return report


def _fmt(v: Optional[float]) -> str:
    return "-" if v is None else f"{v:.6f}"


def write_report(report: EvalReport, sink: TextIO) -> None:
    """``window<TAB>system<TAB>error_rate`` rows, then avg/ci_low/ci_high/t/p."""
    sink.write("# window\tsystem\terror_rate\n")
    for s in report.windows:
        sink.write(f"{s.window_index}\telo\t{s.elo_error:.6f}\n")
        sink.write(f"{s.window_index}\tgelo\t{s.gelo_error:.6f}\n")
    for label in ("avg", "ci_low", "ci_high"):
        sink.write(f"{label}\t{getattr(report.elo, label):.6f}\t{getattr(report.gelo, label):.6f}\n")
    t = report.test
    sink.write(f"t\t{_fmt(t.t_statistic if t else None)}\n")
    sink.write(f"p\t{_fmt(t.p_value if t else None)}\n")


def write_summary(report: EvalReport, sink: TextIO) -> None:
    """Flat ``key = value`` block of the headline figures."""
    t = report.test
    rows: list[tuple[str, str]] = [
        ("windows", str(len(report.windows))),
        ("seeds", ",".join(str(s) for s in report.seeds)),
    ]
    for name, summary in (("elo", report.elo), ("gelo", report.gelo)):
        rows += [
            (f"{name}.avg", _fmt(summary.avg)),
            (f"{name}.ci_low", _fmt(summary.ci_low)),
            (f"{name}.ci_high", _fmt(summary.ci_high)),
            (f"{name}.rv_per_match", _fmt(summary.rv_match)),
            (f"{name}.rv_per_window", _fmt(summary.rv_window)),
        ]
    rows += [
        ("rv_per_window.relative_change", _fmt(report.rv_relative_change)),
        ("mean_diff", _fmt(t.mean_diff if t else None)),
        ("t", _fmt(t.t_statistic if t else None)),
        ("p", _fmt(t.p_value if t else None)),
        ("test_status", t.status.value if t else "skipped"),
        ("new_player_proportion.mean", _fmt(float(np.mean([s.new_player_proportion for s in report.windows])))),
        ("walk_ms.mean", _fmt(float(np.mean([s.walk_ms for s in report.windows])))),
        ("train_ms.mean", _fmt(float(np.mean([s.train_ms for s in report.windows])))),
    ]
    for key, value in rows:
        sink.write(f"{key} = {value}\n")


def write_windows(report: EvalReport, sink: TextIO) -> None:
    """Per-window detail: rank variation, newcomers, active players, timings."""
    sink.write("window\ttest_matches\tnew_player_proportion\telo_rv_match\tgelo_rv_match\t"
               "elo_rv_window\tgelo_rv_window\tactive_players\twalk_ms\ttrain_ms\n")
    for s in report.windows:
        sink.write(
            f"{s.window_index}\t{s.test_matches}\t{s.new_player_proportion:.4f}\t"
            f"{s.elo_rv_match:.4f}\t{s.gelo_rv_match:.4f}\t{s.elo_rv_window:.4f}\t{s.gelo_rv_window:.4f}\t"
            f"{s.active_players:.1f}\t{s.walk_ms:.1f}\t{s.train_ms:.1f}\n"
        )


def cmd_eval(matches_path: Path, config: RunConfig) -> tuple[Path, EvalReport]:
    """
    Evaluate the file and write the report, the summary block and the
    per-window details.

    Raises:
        DatasetError: too few time units.
    """
    ds = ingest(matches_path)
    if not ds.matches:
        raise DatasetError(f"{matches_path} holds no matches to evaluate")
    report = evaluate(ds, config)

    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / REPORT_FILE
    for name, writer in ((REPORT_FILE, write_report), (SUMMARY_FILE, write_summary), (WINDOWS_FILE, write_windows)):
        with open(out_dir / name, "w", encoding="utf-8", newline="\n") as f:
            writer(report, f)
    logger.info(f"Wrote evaluation report to {path}")
    return path, report
