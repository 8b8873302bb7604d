import io
import math

import numpy as np
import pytest

from core.embedding import (
    EmbeddingConfig,
    EmbeddingMatrix,
    TrainingExample,
    _draw_negatives,
    _noise_cdf,
    _sgns_update,
    cosm,
    count_pairs,
    extract_pairs,
    most_similar,
    pairwise_cosm,
    read_word2vec,
    sgns_loss_and_grad,
    sgns_step,
    softmax_objective,
    train,
    train_exact_softmax,
    write_word2vec,
)
from core.errors import EmbeddingError
from core.graph import EdgeStats, SkillGapGraph, WalkCorpus, generate_walks


@pytest.fixture
def star_corpus() -> WalkCorpus:
    g = SkillGapGraph()
    g.set_edge("hub", "x", EdgeStats.from_outcomes(1, 1))
    g.set_edge("hub", "y", EdgeStats.from_outcomes(0, 2))
    g.set_edge("hub", "z", EdgeStats.from_outcomes(1, 3))
    return generate_walks(g, walks_per_node=4, walk_length=12, seed=1)


class TestPairs:
    def test_window_pairs(self):
        pairs = list(extract_pairs([("a", "b", "c")], 1))
        assert pairs == [("a", "b"), ("b", "a"), ("b", "c"), ("c", "b")]

    @pytest.mark.parametrize("length, u", [(1, 3), (5, 2), (12, 5), (3, 10)])
    def test_pair_count(self, length, u):
        walk = tuple(f"n{i}" for i in range(length))
        assert len(list(extract_pairs([walk], u))) == count_pairs(length, u)

    def test_bad_context(self):
        with pytest.raises(EmbeddingError):
            list(extract_pairs([("a", "b")], 0))


class TestObjective:
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        h = 1e-6
        for _ in range(100):
            x, c_pos = rng.normal(size=8), rng.normal(size=8)
            c_negs = rng.normal(size=(5, 8))
            _, gx, gpos, gnegs = sgns_loss_and_grad(x, c_pos, c_negs)

            def numeric(f, v):
                grad = np.zeros_like(v)
                for idx in np.ndindex(v.shape):
                    up, down = v.copy(), v.copy()
                    up[idx] += h
                    down[idx] -= h
                    grad[idx] = (f(up) - f(down)) / (2 * h)
                return grad

            nx = numeric(lambda v: sgns_loss_and_grad(v, c_pos, c_negs)[0], x)
            npos = numeric(lambda v: sgns_loss_and_grad(x, v, c_negs)[0], c_pos)
            nnegs = numeric(lambda v: sgns_loss_and_grad(x, c_pos, v)[0], c_negs)
            for analytic, approx in ((gx, nx), (gpos, npos), (gnegs, nnegs)):
                assert np.linalg.norm(analytic - approx) <= 1e-6 * max(np.linalg.norm(analytic), 1.0)

    def test_zero_vectors(self):
        loss, gx, _, _ = sgns_loss_and_grad(np.zeros(4), np.zeros(4), np.zeros((5, 4)))
        assert loss == pytest.approx(6 * math.log(2), abs=1e-12)
        assert not gx.any()

    def test_step_lowers_loss(self):
        rng = np.random.default_rng(4)
        ids = ["a", "b", "c", "d"]
        mat = EmbeddingMatrix(ids, rng.normal(size=(4, 6)), rng.normal(size=(4, 6)))
        ex = TrainingExample(center="a", positive="b", negatives=["c", "d"])
        _, before = sgns_step(mat, ex, lr=0.01)
        after = sgns_loss_and_grad(mat["a"], mat.context[1], mat.context[[2, 3]])[0]
        assert after < before

    def test_update_follows_gradient(self):
        rng = np.random.default_rng(9)
        W, C = rng.normal(size=(6, 5)), rng.normal(size=(6, 5))
        targets = np.array([2, 4, 1, 5], dtype=np.int64)
        lr = 0.05
        loss, gx, gpos, gnegs = sgns_loss_and_grad(W[0], C[2], C[[4, 1, 5]])

        W2, C2 = W.copy(), C.copy()
        got = _sgns_update(W2, C2, 0, targets, 4, lr, np.empty(5), np.empty(4))
        assert got == pytest.approx(loss, rel=1e-12)
        np.testing.assert_allclose(W2[0], W[0] - lr * gx, rtol=0, atol=1e-12)
        np.testing.assert_allclose(C2[2], C[2] - lr * gpos, rtol=0, atol=1e-12)
        np.testing.assert_allclose(C2[[4, 1, 5]], C[[4, 1, 5]] - lr * gnegs, rtol=0, atol=1e-12)
        np.testing.assert_array_equal(W2[1:], W[1:])
        np.testing.assert_array_equal(C2[[0, 3]], C[[0, 3]])

    def test_training_applies_sgns_steps(self):
        # two nodes leave no noise candidates, so training is just the pair steps in walk order
        corpus = WalkCorpus([("a", "b", "a")], walks_per_node=1, walk_length=3)
        cfg = EmbeddingConfig(dim=4, context=1, epochs=1, negatives=1, seed=5)
        trained = train(corpus, cfg)

        start = np.random.default_rng(cfg.seed).uniform(-0.5 / 4, 0.5 / 4, size=(2, 4))
        mat = EmbeddingMatrix(["a", "b"], start.copy(), np.zeros((2, 4)))
        for step, (center, positive) in enumerate(extract_pairs(corpus, 1)):
            lr = cfg.lr_start - (cfg.lr_start - cfg.lr_end) * step / 4
            sgns_step(mat, TrainingExample(center=center, positive=positive), lr)
        assert trained.ids == ["a", "b"]
        np.testing.assert_allclose(trained.vectors, mat.vectors, rtol=0, atol=1e-15)
        np.testing.assert_allclose(trained.context, mat.context, rtol=0, atol=1e-15)
        assert not np.array_equal(mat.vectors, start)

    def test_step_needs_context(self):
        mat = EmbeddingMatrix(["a", "b"], np.ones((2, 3)))
        with pytest.raises(EmbeddingError):
            sgns_step(mat, TrainingExample(center="a", positive="b"), lr=0.1)


class TestNoise:
    def test_never_hits_center_or_positive(self):
        cdf = _noise_cdf(np.array([10.0, 1.0, 1.0, 1.0, 5.0]), 0.75)
        rng = np.random.default_rng(2)
        out = np.empty(6, dtype=np.int64)
        for center, positive in rng.integers(0, 5, size=(500, 2)):
            assert _draw_negatives(cdf, int(center), int(positive), 5, out, 1) == 5
            negs = out[1:]
            assert ((negs >= 0) & (negs < 5)).all()
            assert not ((negs == center) | (negs == positive)).any()

    def test_dominant_node_still_excluded(self):
        # node 0 holds almost all the noise mass; draws must fall back to the rest
        cdf = _noise_cdf(np.array([1e9, 1.0, 1.0]), 1.0)
        out = np.empty(4, dtype=np.int64)
        assert _draw_negatives(cdf, 0, 1, 4, out, 0) == 4
        assert (out == 2).all()

    def test_no_other_node(self):
        cdf = _noise_cdf(np.array([3.0, 2.0]), 0.75)
        out = np.full(3, -1, dtype=np.int64)
        assert _draw_negatives(cdf, 0, 1, 2, out, 1) == 0
        assert (out == -1).all()

    def test_cdf_ends_at_one(self):
        cdf = _noise_cdf(np.array([4.0, 1.0, 9.0]), 0.75)
        assert cdf[-1] == 1.0
        assert (np.diff(cdf) > 0).all()


class TestTraining:
    def test_deterministic_runs_are_identical(self, star_corpus):
        cfg = EmbeddingConfig(dim=8, context=2, epochs=2, negatives=2, seed=3)
        a, b = train(star_corpus, cfg), train(star_corpus, cfg)
        assert a.ids == b.ids == ["hub", "x", "y", "z"]
        assert np.array_equal(a.vectors, b.vectors)
        assert a.is_finite()

    def test_parallel_mode_stays_finite(self, star_corpus):
        cfg = EmbeddingConfig(dim=8, context=2, epochs=2, negatives=2, deterministic=False, threads=3)
        assert cfg.parallel
        mat = train(star_corpus, cfg)
        assert mat.vectors.shape == (4, 8)
        assert mat.is_finite()

    def test_subsampling_runs(self, star_corpus):
        mat = train(star_corpus, EmbeddingConfig(dim=4, context=2, epochs=1, negatives=2, subsample=0.1))
        assert mat.is_finite()

    def test_empty_corpus(self):
        with pytest.raises(EmbeddingError):
            train(WalkCorpus([], walks_per_node=1, walk_length=1))

    def test_lr_order(self):
        with pytest.raises(ValueError):
            EmbeddingConfig(lr_start=0.001, lr_end=0.01)


class TestExactSoftmax:
    def test_objective_improves_beyond_uniform(self, star_corpus):
        mat, history = train_exact_softmax(star_corpus, dim=4, context=1, steps=200)
        assert history[-1] > history[0]
        assert history[-1] > -math.log(len(mat))

    def test_objective_matches_history(self, star_corpus):
        pairs = list(extract_pairs(star_corpus, 1))
        mat, history = train_exact_softmax(star_corpus, steps=1)
        # history is recorded before the single update; recompute it from scratch
        rng = np.random.default_rng(0)
        start = EmbeddingMatrix(mat.ids, rng.normal(scale=0.1, size=(4, 4)), rng.normal(scale=0.1, size=(4, 4)))
        assert softmax_objective(start, pairs) / len(pairs) == pytest.approx(history[0])

    def test_oracle_size_limit(self, star_corpus):
        with pytest.raises(EmbeddingError):
            train_exact_softmax(star_corpus, dim=9)


class TestSimilarity:
    def test_cosm(self):
        x = np.array([0.3, -1.2, 2.0])
        assert cosm(x, x.copy()) == 1.0
        assert cosm(x, -x) == pytest.approx(1.0)
        assert cosm([1.0, 0.0], [0.0, 2.0]) == 0.0
        assert cosm([1.0, 1.0], [1.0, 0.0]) == pytest.approx(math.sqrt(0.5))

    def test_cosm_errors(self):
        with pytest.raises(EmbeddingError):
            cosm(np.zeros(3), np.ones(3))
        with pytest.raises(EmbeddingError):
            cosm(np.ones(2), np.ones(3))

    def test_most_similar(self):
        mat = EmbeddingMatrix(["a", "b", "c"], np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]]))
        ranked = most_similar(mat, "a", top_n=2)
        assert [pid for pid, _ in ranked] == ["b", "c"]

    def test_unknown_row(self):
        mat = EmbeddingMatrix(["a"], np.ones((1, 2)))
        with pytest.raises(EmbeddingError, match="'zz'"):
            mat["zz"]


class TestWord2Vec:
    def test_write_then_read(self, star_corpus):
        mat = train(star_corpus, EmbeddingConfig(dim=5, context=1, epochs=1, negatives=2))
        sink = io.StringIO()
        write_word2vec(mat, sink)
        text = sink.getvalue()
        assert text.splitlines()[0] == "4 5"
        loaded = read_word2vec(io.StringIO(text))
        assert loaded.ids == mat.ids
        assert loaded.context is None
        np.testing.assert_allclose(loaded.vectors, mat.vectors, rtol=1e-5, atol=1e-12)

    def test_short_row(self):
        with pytest.raises(EmbeddingError, match="row 1"):
            read_word2vec(io.StringIO("1 3\na 1 2\n"))


@pytest.mark.slow
def test_bridged_cliques_separate():
    left = [f"l{i}" for i in range(10)]
    right = [f"r{i}" for i in range(10)]
    g = SkillGapGraph()
    for clique in (left, right):
        for i, a in enumerate(clique):
            for b in clique[i + 1:]:
                g.set_edge(a, b, EdgeStats.from_outcomes(0, 2))
    g.set_edge("l0", "r0", EdgeStats.from_outcomes(1, 1))
    assert g.edge("l0", "r0").weight == 0.01

    separated = 0
    for seed in range(5):
        mat = train(generate_walks(g, seed=seed), EmbeddingConfig(seed=seed))
        sims = pairwise_cosm(mat, left + right)
        upper = np.triu_indices(10, k=1)
        intra = np.concatenate((sims[:10, :10][upper], sims[10:, 10:][upper])).mean()
        inter = sims[:10, 10:].mean()
        separated += intra > inter
    assert separated >= 4
