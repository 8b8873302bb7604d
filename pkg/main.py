"""
GElo - command-line entry point

Subcommands:
    python main.py rate MATCHES             # Elo ratings
    python main.py gelo MATCHES             # GElo ratings + embeddings + report
    python main.py eval MATCHES             # windowed Elo vs. GElo evaluation
    python main.py simulate [SPEC]          # synthetic match file

Common flags: --config PATH, --seed N, --threads N, --out DIR, --deterministic, --debug
Diagnostics go to stderr; data goes to files.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

# ==================== 日志配置 ====================
logging.basicConfig(level=logging.INFO, format='%(message)s')

logger = logging.getLogger(__name__)

# ==================== Rich UI ====================
from rich.console import Console
from rich.markup import escape
from rich.table import Table
from rich.theme import Theme

custom_theme = Theme({
    "info": "dim cyan",
    "success": "bold green",
    "warning": "bold yellow",
    "error": "bold red",
})
console = Console(theme=custom_theme, stderr=True)

from config import Config, RunConfig, load_run_config
from core.errors import GeloError
from services.evaluation_service import EvalReport, cmd_eval
from services.rating_service import cmd_gelo, cmd_rate
from services.simulation_service import cmd_simulate


# ==================== 参数解析 ====================

def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value config file")
    common.add_argument("--seed", type=int, help="base random seed")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--deterministic", action="store_true", default=None,
                        help="single-threaded, bitwise reproducible embedding training")
    common.add_argument("--debug", action="store_true", help="verbose logging")
    return common


def _run_flags() -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("matches", type=Path, help="match file")
    flags.add_argument("--out", dest="out_dir", type=Path, help="output directory")
    flags.add_argument("--k-factor", type=float)
    flags.add_argument("--dim", type=int)
    flags.add_argument("--epochs", type=int)
    flags.add_argument("--walks-per-node", type=int)
    flags.add_argument("--walk-length", type=int)
    flags.add_argument("--units", type=int)
    flags.add_argument("--window-len", type=int)
    flags.add_argument("--seeds", type=int, help="GElo runs per window (eval)")
    flags.add_argument("--no-recenter", dest="recenter", action="store_false", default=None,
                       help="keep bonus points without restoring the mean")
    flags.add_argument("--frozen-test", action="store_true", default=None,
                       help="score test matches without Elo updates (eval)")
    return flags


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gelo", description="GElo rating engine")
    sub = parser.add_subparsers(dest="command", required=True)
    common, run = _common_flags(), _run_flags()

    sub.add_parser("rate", parents=[common, run], help="Elo ratings of a match file")

    gelo = sub.add_parser("gelo", parents=[common, run], help="GElo ratings, embeddings and report")
    gelo.add_argument("--embeddings", type=Path, help="reuse a word2vec embedding file instead of training")
    gelo.add_argument("--export-graph", action="store_true", default=None, help="also write graph.tsv and walks.txt")

    sub.add_parser("eval", parents=[common, run], help="windowed Elo vs. GElo evaluation")

    sim = sub.add_parser("simulate", parents=[common], help="write a synthetic match file")
    sim.add_argument("spec", type=Path, nargs="?", help="key = value synthetic spec file")
    sim.add_argument("--out", type=Path, default=Path("matches.csv"), help="output match file")
    return parser


_FLAG_FIELDS = (
    "seed", "threads", "deterministic", "k_factor", "dim", "epochs", "walks_per_node",
    "walk_length", "units", "window_len", "seeds", "recenter", "frozen_test",
    "out_dir", "embeddings", "export_graph",
)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Defaults < --config file < flags."""
    overrides = {name: getattr(args, name, None) for name in _FLAG_FIELDS}
    return load_run_config(args.config, overrides)


# ==================== 输出 ====================

def print_eval_table(report: EvalReport) -> None:
    table = Table(title="Prediction error rate", header_style="bold cyan")
    table.add_column("window", justify="right")
    table.add_column("Elo", justify="right")
    table.add_column("GElo", justify="right")
    table.add_column("new players", justify="right")
    for s in report.windows:
        table.add_row(str(s.window_index), f"{s.elo_error:.4f}", f"{s.gelo_error:.4f}",
                      f"{s.new_player_proportion:.2%}")
    table.add_row("avg", f"{report.elo.avg:.4f}", f"{report.gelo.avg:.4f}", "", style="bold")
    console.print(table)
    if report.test is not None and not report.test.degenerate:
        console.print(f"[info]paired t = {report.test.t_statistic:.4f}, p = {report.test.p_value:.4f}[/info]")


# ==================== 主入口 ====================

def run_command(args: argparse.Namespace) -> None:
    if args.command == "simulate":
        path, count = cmd_simulate(args.spec, args.out, seed=args.seed)
        console.print(f"[success]✓ {count} matches written to {path}[/success]")
        return

    config = config_from_args(args)
    if args.command == "rate":
        path, table = cmd_rate(args.matches, config)
        console.print(f"[success]✓ {len(table)} ratings written to {path}[/success]")
    elif args.command == "gelo":
        with console.status("[info]Running GElo pipeline...[/info]", spinner="dots"):
            artifacts, run = cmd_gelo(args.matches, config)
        console.print(f"[success]✓ {run.report.active_count} active players adjusted; "
                      f"artifacts in {artifacts.ratings.parent}[/success]")
    elif args.command == "eval":
        with console.status("[info]Evaluating windows...[/info]", spinner="dots"):
            path, report = cmd_eval(args.matches, config)
        print_eval_table(report)
        console.print(f"[success]✓ report written to {path}[/success]")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.debug else getattr(logging, Config.LOG_LEVEL, logging.INFO)
    logging.getLogger().setLevel(level)

    try:
        run_command(args)
    except GeloError as e:
        console.print(f"[error]错误: {escape(str(e))}[/error]")
        return 1
    except OSError as e:
        console.print(f"[error]I/O 错误: {escape(str(e))}[/error]")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
