import io
import math

import numpy as np
import pytest

from conftest import dataset, match
from core.elo import RatingTable, expected_win_rate, export_ratings, replay, side_rating, update_match
from core.errors import RatingError


def test_expected_win_rate_closed_form():
    assert expected_win_rate(1700, 1500) == pytest.approx(0.759746926, abs=1e-9)
    assert expected_win_rate(1500, 1500) == 0.5


def test_expected_win_rate_complement():
    rng = np.random.default_rng(1)
    for r_a, r_b in rng.uniform(500, 2500, size=(1000, 2)):
        assert expected_win_rate(r_a, r_b) + expected_win_rate(r_b, r_a) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
def test_non_finite_rating_rejected(bad):
    with pytest.raises(RatingError):
        expected_win_rate(bad, 1500)
    with pytest.raises(RatingError):
        RatingTable()["a"] = bad


def test_single_match_from_defaults():
    table = replay(dataset(match(0, "a", "b")))
    assert table["a"] == pytest.approx(1525.0)
    assert table["b"] == pytest.approx(1475.0)


def test_team_match_uses_opponent_average():
    table = RatingTable(ratings={"a": 1600, "b": 1400, "c": 1500, "d": 1500})
    update_match(table, match(0, "a;b", "c;d"), k=50)
    # side A averages 1500, so every member is measured against 1500
    assert table["a"] == pytest.approx(1600 + 50 * (1 - expected_win_rate(1600, 1500)))
    assert table["b"] == pytest.approx(1400 + 50 * (1 - expected_win_rate(1400, 1500)))
    assert table["c"] == pytest.approx(1475.0)
    assert table["d"] == pytest.approx(1475.0)


def test_member_order_does_not_matter():
    start = {"a": 1620, "b": 1480, "c": 1510, "d": 1390}
    t1 = update_match(RatingTable(ratings=start), match(0, "a;b", "c;d", "B"))
    t2 = update_match(RatingTable(ratings=start), match(0, "b;a", "d;c", "B"))
    assert t1.as_dict() == t2.as_dict()


def test_zero_k_freezes_ratings():
    table = replay(dataset(match(0, "a", "b"), match(1, "b", "c")), k=0)
    assert set(table.as_dict().values()) == {1500.0}


def test_negative_k_rejected():
    with pytest.raises(RatingError):
        replay(dataset(match(0, "a", "b")), k=-1)


def test_lookup_registers_unseen_player():
    table = RatingTable(default_score=1200)
    assert table.get("x") == 1200
    assert "x" not in table
    assert side_rating(table, ("x", "y")) == 1200
    assert "x" in table and "y" in table


def test_table_helpers():
    table = RatingTable(ratings={"b": 1500, "a": 1500, "c": 1600})
    assert table.ranked() == [("c", 1600), ("a", 1500), ("b", 1500)]
    assert table.mean() == pytest.approx(1533.3333333)
    assert RatingTable(default_score=1400).mean() == 1400
    clone = table.copy()
    clone["a"] = 0
    assert table["a"] == 1500


def test_export_format():
    sink = io.StringIO()
    export_ratings(replay(dataset(match(0, "a", "b"))), sink)
    assert sink.getvalue() == "a\t1525.0000\nb\t1475.0000\n"


def test_one_on_one_is_zero_sum():
    rng = np.random.default_rng(7)
    for r_a, r_b, k, a_wins in zip(rng.uniform(800, 2400, 500), rng.uniform(800, 2400, 500),
                                   rng.uniform(1, 100, 500), rng.random(500) < 0.5):
        table = RatingTable(ratings={"a": r_a, "b": r_b})
        update_match(table, match(0, "a", "b", "A" if a_wins else "B"), k=k)
        assert (table["a"] - r_a) + (table["b"] - r_b) == pytest.approx(0.0, abs=1e-9)


def test_expected_win_rate_increases_with_own_rating():
    grid = np.linspace(900, 2100, 241)
    for r_b in (1200.0, 1500.0, 1850.0):
        rates = [expected_win_rate(r_a, r_b) for r_a in grid]
        assert all(lo < hi for lo, hi in zip(rates, rates[1:]))


def test_expected_win_rate_shift_invariant():
    rng = np.random.default_rng(3)
    for r_a, r_b, c in zip(rng.uniform(500, 2500, 300), rng.uniform(500, 2500, 300), rng.uniform(-1000, 1000, 300)):
        base = expected_win_rate(r_a, r_b)
        assert expected_win_rate(r_a + c, r_b + c) == pytest.approx(base, rel=1e-12)


def test_replay_is_bitwise_repeatable():
    rng = np.random.default_rng(11)
    players = [f"p{i}" for i in range(10)]
    matches = []
    for t in range(300):
        a, b, c, d = (players[i] for i in rng.choice(10, size=4, replace=False))
        if t % 3:
            matches.append(match(t, a, b, "A" if rng.random() < 0.5 else "B"))
        else:
            matches.append(match(t, f"{a};{b}", f"{c};{d}", "A" if rng.random() < 0.5 else "B"))
    ds = dataset(*matches)
    assert replay(ds).as_dict() == replay(ds).as_dict()


def test_two_wins_in_a_row():
    table = replay(dataset(match(0, "a", "b"), match(1, "a", "b")))
    second_gain = 50 * (1 - 1 / (1 + 10 ** (-50 / 400)))
    assert table["a"] == pytest.approx(1525 + second_gain, abs=1e-6)
    assert round(table["a"], 1) == 1546.4
    assert table["a"] + table["b"] == pytest.approx(3000.0)


def test_two_on_two_figures():
    table = RatingTable(ratings={"a1": 1500, "a2": 1700, "b1": 1500, "b2": 1500})
    update_match(table, match(0, "a1;a2", "b1;b2", "B"), k=50)
    gain_b = 50 * (1 - 1 / (1 + 10 ** (-(1500 - 1600) / 400)))
    loss_a2 = 50 / (1 + 10 ** (-200 / 400))
    assert table["b1"] - 1500 == pytest.approx(gain_b, abs=1e-6)
    assert table["b2"] - 1500 == pytest.approx(gain_b, abs=1e-6)
    assert table["a1"] - 1500 == pytest.approx(-25.0, abs=1e-6)
    assert table["a2"] - 1700 == pytest.approx(-loss_a2, abs=1e-6)
    assert gain_b == pytest.approx(32.00, abs=0.005)
    assert loss_a2 == pytest.approx(37.99, abs=0.005)
