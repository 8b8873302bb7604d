"""End-to-end runs through main() on small files."""

import os
from itertools import combinations

import pytest

from config import load_run_config
from core.match_data import read_matches
from core.stats import paired_t_test
from main import main
from services.evaluation_service import evaluate

TINY = ["--dim", "4", "--epochs", "1", "--walks-per-node", "2", "--walk-length", "6"]


@pytest.fixture
def synthetic_file(tmp_path, write_file):
    """Write a synthetic match file via the simulate command."""
    def _make(players: int, matches: int, seed: int = 1):
        spec = write_file(f"sim_{players}_{matches}.conf",
                          f"player_count = {players}\nmatch_count = {matches}\nlow_activity_fraction = 0.5\n")
        out = tmp_path / f"matches_{players}_{matches}.csv"
        assert main(["simulate", str(spec), "--out", str(out), "--seed", str(seed)]) == 0
        return out
    return _make


class TestRate:
    def test_single_match(self, write_file, tmp_path):
        path = write_file("m.csv", "0,a,b,A\n")
        assert main(["rate", str(path), "--out", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "ratings.tsv").read_text(encoding="utf-8") == "a\t1525.0000\nb\t1475.0000\n"

    def test_empty_file(self, write_file, tmp_path):
        path = write_file("m.csv", "")
        assert main(["rate", str(path), "--out", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "ratings.tsv").read_text(encoding="utf-8") == ""

    def test_malformed_row(self, write_file, tmp_path, capsys):
        path = write_file("m.csv", "timestamp,side_a,side_b,winner\n0,a,b,A\n1,a,b\n")
        assert main(["rate", str(path), "--out", str(tmp_path / "out")]) == 1
        err = capsys.readouterr().err
        assert "line 3" in err
        assert "ingest" in err

    def test_missing_file(self, tmp_path):
        assert main(["rate", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "out")]) == 1

    def test_bad_config_key(self, write_file, tmp_path, capsys):
        path = write_file("m.csv", "0,a,b,A\n")
        conf = write_file("run.conf", "kfactor = 10\n")
        assert main(["rate", str(path), "--config", str(conf)]) == 1
        assert "kfactor" in capsys.readouterr().err

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["rate"])
        assert exc.value.code == 2


class TestSimulate:
    def test_row_count_and_round_trip(self, synthetic_file):
        path = synthetic_file(20, 100)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "timestamp,side_a,side_b,winner"
        assert len(lines) == 101
        ds = read_matches(path)
        assert len(ds) == 100
        assert ds.skipped_total == 0

    def test_fixed_seed_is_byte_identical(self, synthetic_file, tmp_path):
        first = synthetic_file(20, 100).read_bytes()
        again = tmp_path / "again.csv"
        spec = tmp_path / "sim_20_100.conf"
        assert main(["simulate", str(spec), "--out", str(again), "--seed", "1"]) == 0
        assert again.read_bytes() == first

    def test_infeasible_spec(self, write_file, tmp_path):
        spec = write_file("bad.conf", "player_count = 1\nmatch_count = 5\n")
        assert main(["simulate", str(spec), "--out", str(tmp_path / "x.csv")]) == 1


class TestGelo:
    def test_writes_three_artifacts(self, synthetic_file, tmp_path):
        matches = synthetic_file(50, 400)
        out = tmp_path / "gelo"
        assert main(["gelo", str(matches), "--out", str(out), *TINY]) == 0
        for name in ("gelo_ratings.tsv", "embeddings.txt", "adjustment_report.tsv"):
            assert (out / name).stat().st_size > 0
        assert not (out / "graph.tsv").exists()
        players = len(read_matches(matches).players)
        assert (out / "embeddings.txt").read_text(encoding="utf-8").splitlines()[0] == f"{players} 4"

    def test_deterministic_runs_are_byte_identical(self, synthetic_file, tmp_path):
        matches = synthetic_file(50, 400)
        for run in ("one", "two"):
            assert main(["gelo", str(matches), "--out", str(tmp_path / run), "--deterministic", "--seed", "4",
                         *TINY]) == 0
        for name in ("embeddings.txt", "adjustment_report.tsv", "gelo_ratings.tsv"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()

    def test_every_pair_met_once(self, write_file, tmp_path):
        players = ["a", "b", "c", "d", "e"]
        rows = [f"{t},{x},{y},A" for t, (x, y) in enumerate(combinations(players, 2))]
        path = write_file("rr.csv", "\n".join(rows) + "\n")
        out = tmp_path / "rr"
        assert main(["gelo", str(path), "--out", str(out), "--export-graph", *TINY]) == 0
        edges = (out / "graph.tsv").read_text(encoding="utf-8").splitlines()
        assert len(edges) == 10
        assert all(line.endswith("\t1\t1\t0.010000") or line.endswith("\t1\t-1\t0.010000") for line in edges)
        assert (out / "walks.txt").exists()

    def test_reuses_embedding_file(self, synthetic_file, tmp_path):
        matches = synthetic_file(50, 400)
        assert main(["gelo", str(matches), "--out", str(tmp_path / "first"), *TINY]) == 0
        emb = tmp_path / "first" / "embeddings.txt"
        assert main(["gelo", str(matches), "--out", str(tmp_path / "second"), "--embeddings", str(emb)]) == 0
        first = emb.read_text(encoding="utf-8").splitlines()[0]
        assert (tmp_path / "second" / "embeddings.txt").read_text(encoding="utf-8").splitlines()[0] == first

    def test_broken_embedding_file(self, synthetic_file, write_file, tmp_path, capsys):
        matches = synthetic_file(50, 400)
        emb = write_file("broken.txt", "2 3\nx 1 2\n")
        assert main(["gelo", str(matches), "--out", str(tmp_path / "o"), "--embeddings", str(emb)]) == 1
        assert "[train]" in capsys.readouterr().err


def report_rows(path):
    return [line.split("\t") for line in path.read_text(encoding="utf-8").splitlines() if not line.startswith("#")]


class TestEval:
    def test_ten_windows(self, synthetic_file, tmp_path):
        matches = synthetic_file(30, 260)
        out = tmp_path / "eval"
        assert main(["eval", str(matches), "--out", str(out), "--seeds", "1", *TINY]) == 0
        rows = report_rows(out / "eval_report.tsv")
        assert len(rows) == 25
        assert [r[1] for r in rows[:4]] == ["elo", "gelo", "elo", "gelo"]
        assert [r[0] for r in rows[20:]] == ["avg", "ci_low", "ci_high", "t", "p"]
        summary = (out / "eval_summary.txt").read_text(encoding="utf-8")
        assert "windows = 10" in summary
        assert len((out / "eval_windows.tsv").read_text(encoding="utf-8").splitlines()) == 11

    def test_single_window(self, synthetic_file, tmp_path):
        matches = synthetic_file(30, 260)
        out = tmp_path / "eval"
        assert main(["eval", str(matches), "--out", str(out), "--seeds", "1", "--units", "4", *TINY]) == 0
        rows = report_rows(out / "eval_report.tsv")
        assert [r[0] for r in rows[:2]] == ["1", "1"]
        assert rows[-2:] == [["t", "-"], ["p", "-"]]

    def test_too_few_units(self, write_file, tmp_path, capsys):
        path = write_file("m.csv", "0,a,b,A\n1,a,b,B\n")
        assert main(["eval", str(path), "--out", str(tmp_path / "o")]) == 1
        assert "distinct timestamps" in capsys.readouterr().err

    def test_report_test_matches_standalone_t_test(self, synthetic_file, tmp_path):
        ds = read_matches(synthetic_file(30, 260))
        cfg = load_run_config(overrides={"seeds": 2, "dim": 4, "epochs": 1, "walks_per_node": 2,
                                         "walk_length": 6, "out_dir": tmp_path})
        report = evaluate(ds, cfg)
        standalone = paired_t_test([w.elo_error for w in report.windows], [w.gelo_error for w in report.windows])
        assert report.test == standalone
        assert report.seeds == [0, 1]

    def test_thread_pool_gives_same_error_rates(self, synthetic_file, tmp_path):
        ds = read_matches(synthetic_file(30, 260))
        base = {"seeds": 1, "dim": 4, "epochs": 1, "walks_per_node": 2, "walk_length": 6, "out_dir": tmp_path}
        serial = evaluate(ds, load_run_config(overrides=base))
        pooled = evaluate(ds, load_run_config(overrides={**base, "threads": 3}))
        assert [w.elo_error for w in pooled.windows] == [w.elo_error for w in serial.windows]
        assert [w.gelo_error for w in pooled.windows] == [w.gelo_error for w in serial.windows]


@pytest.mark.slow
def test_default_synthetic_evaluation(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--out", str(out)]) == 0
    ds = read_matches(out)
    assert len(ds) == 5000
    cfg = load_run_config(overrides={"seeds": 5, "threads": os.cpu_count() or 1, "out_dir": tmp_path})
    assert (cfg.units, cfg.dim, cfg.epochs, cfg.walks_per_node, cfg.walk_length) == (13, 300, 5, 16, 100)
    report = evaluate(ds, cfg)
    assert len(report.windows) == 10
    assert report.seeds == [cfg.seed + s for s in range(5)]
    assert 0.0 < report.elo.avg < 0.5
    assert report.test is not None
    # GElo predicts at least as well as Elo and keeps the leaderboard steadier
    assert report.gelo.avg <= report.elo.avg
    assert report.gelo.rv_window <= report.elo.rv_window
