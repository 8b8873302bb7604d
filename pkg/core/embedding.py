"""
Skip-gram player embeddings trained on the walk corpus.

The objective maximises log sigma(x'_pos . x_c) + sum_neg log sigma(-x'_neg . x_c),
the negative-sampling surrogate of the full softmax over the vocabulary. Input
rows are the exported embeddings; context rows stay inside the trainer.

Training runs in compiled kernels (numba) that release the GIL:
- deterministic (default): one worker, one SGD step per (center, positive)
  pair in corpus order, bitwise reproducible for a given seed.
- parallel: ``threads`` workers split the walks and update the shared
  matrices without locks. Lost updates on contended rows are tolerated;
  entries stay finite but runs are not reproducible.
"""

from __future__ import annotations

import logging
import math
import time
from typing import Iterable, Iterator, Optional, Sequence, TextIO, Union

import numba
import numpy as np
from numba import njit, prange
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import expit, log_expit, logsumexp

from core.errors import EmbeddingError
from core.graph.walker import Walk, WalkCorpus
from core.match_data import PlayerId

logger = logging.getLogger(__name__)

# Exact-softmax oracle limits
ORACLE_MAX_VOCAB = 30
ORACLE_MAX_DIM = 8

# Noise draws that hit the center or positive before a uniform fallback
MAX_REDRAWS = 64


# ============== Configuration ==============

class EmbeddingConfig(BaseModel):
    """Hyper-parameters of the Skip-gram trainer."""
    model_config = ConfigDict(frozen=True)

    dim: int = Field(default=300, ge=1)
    context: int = Field(default=5, ge=1)
    epochs: int = Field(default=5, ge=1)
    negatives: int = Field(default=5, ge=1)
    lr_start: float = Field(default=0.025, gt=0.0)
    lr_end: float = Field(default=1e-4, gt=0.0)
    noise_exponent: float = Field(default=0.75, ge=0.0)
    subsample: float = Field(default=0.0, ge=0.0, description="Frequency subsampling threshold, 0 disables")
    seed: int = Field(default=0, ge=0)
    deterministic: bool = True
    threads: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_lr(self) -> "EmbeddingConfig":
        if self.lr_end > self.lr_start:
            raise ValueError(f"lr_end ({self.lr_end}) must not exceed lr_start ({self.lr_start})")
        return self

    @property
    def parallel(self) -> bool:
        return not self.deterministic and self.threads > 1


class TrainingExample(BaseModel):
    """One center node, one window neighbour and its noise samples."""
    center: PlayerId
    positive: PlayerId
    negatives: list[PlayerId] = Field(default_factory=list)


# ============== Embedding matrix ==============

class EmbeddingMatrix:
    """
    Player id -> embedding row, plus the trainer's context rows.

    ``vectors`` is the exported mapping; ``context`` is ``None`` for matrices
    loaded from a file.
    """

    def __init__(self, ids: Sequence[PlayerId], vectors: np.ndarray, context: Optional[np.ndarray] = None):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(ids):
            raise EmbeddingError(f"expected a {len(ids)} x d matrix, got shape {vectors.shape}")
        if context is not None:
            context = np.asarray(context, dtype=np.float64)
            if context.shape != vectors.shape:
                raise EmbeddingError("context rows must match the input rows' shape")
        self.ids = list(ids)
        self.index = {pid: i for i, pid in enumerate(self.ids)}
        if len(self.index) != len(self.ids):
            raise EmbeddingError("duplicate player id in embedding rows")
        self.vectors = vectors
        self.context = context

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, pid: object) -> bool:
        return pid in self.index

    def row(self, pid: PlayerId) -> int:
        try:
            return self.index[pid]
        except KeyError:
            raise EmbeddingError(f"no embedding row for player {pid!r}") from None

    def __getitem__(self, pid: PlayerId) -> np.ndarray:
        return self.vectors[self.row(pid)]

    def is_finite(self) -> bool:
        ok = bool(np.isfinite(self.vectors).all())
        if self.context is not None:
            ok = ok and bool(np.isfinite(self.context).all())
        return ok

    def __repr__(self) -> str:
        return f"<EmbeddingMatrix(rows={len(self)}, dim={self.dim})>"


# ============== Pairs ==============

def extract_pairs(corpus: Union[WalkCorpus, Iterable[Walk]], u: int) -> Iterator[tuple[PlayerId, PlayerId]]:
    """
    Yield ``(walk[p], walk[q])`` for every ``q != p`` with ``|q - p| <= u``.
    """
    if u < 1:
        raise EmbeddingError(f"context size must be >= 1, got {u}")
    walks = corpus.walks if isinstance(corpus, WalkCorpus) else corpus
    for walk in walks:
        n = len(walk)
        for p in range(n):
            for q in range(max(0, p - u), min(n, p + u + 1)):
                if q != p:
                    yield walk[p], walk[q]


def count_pairs(length: int, u: int) -> int:
    """Number of pairs ``extract_pairs`` yields for one walk of ``length``."""
    # each side of position p contributes min(p, u); both sides sum alike
    last = max(length - 1, 0)
    if last <= u:
        return last * (last + 1)
    return u * (u + 1) + 2 * u * (last - u)


# ============== Objective ==============

def sgns_loss_and_grad(
    x: np.ndarray, c_pos: np.ndarray, c_negs: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """
    Negative-sampling loss ``-l`` and its gradients.

    Args:
        x: center input row, shape (d,)
        c_pos: positive context row, shape (d,)
        c_negs: negative context rows, shape (k, d)

    Returns:
        (loss, d loss/dx, d loss/dc_pos, d loss/dc_negs)
    """
    c_negs = np.asarray(c_negs, dtype=np.float64).reshape(-1, x.shape[0])
    s_pos = float(c_pos @ x)
    s_neg = c_negs @ x
    loss = -(float(log_expit(s_pos)) + float(np.sum(log_expit(-s_neg))))
    g_pos = expit(s_pos) - 1.0
    g_neg = expit(s_neg)
    grad_x = g_pos * c_pos + g_neg @ c_negs
    grad_pos = g_pos * x
    grad_negs = np.outer(g_neg, x)
    return loss, grad_x, grad_pos, grad_negs


def sgns_step(mat: EmbeddingMatrix, ex: TrainingExample, lr: float) -> tuple[EmbeddingMatrix, float]:
    """
    One stochastic gradient ascent step on a single training example.

    Updates the center's input row and the positive/negative context rows in
    place through the same kernel the trainer uses; returns the matrix and the
    pre-step loss.

    Raises:
        EmbeddingError: unknown id, missing context rows or non-finite gradient.
    """
    if mat.context is None:
        raise EmbeddingError("matrix has no context rows; it cannot be trained")
    c = mat.row(ex.center)
    targets = np.array([mat.row(ex.positive)] + [mat.row(n) for n in ex.negatives], dtype=np.int64)

    loss, grad_x, grad_pos, grad_negs = sgns_loss_and_grad(mat.vectors[c], mat.context[targets[0]],
                                                           mat.context[targets[1:]])
    if not (np.isfinite(grad_x).all() and np.isfinite(grad_pos).all() and np.isfinite(grad_negs).all()):
        raise EmbeddingError(f"non-finite gradient for example {ex.center!r} -> {ex.positive!r}")

    _sgns_update(mat.vectors, mat.context, c, targets, len(targets), lr,
                 np.empty(mat.dim), np.empty(len(targets)))
    return mat, loss


# ============== Compiled kernels ==============

@njit(cache=True)
def _sigmoid(s):
    if s >= 0.0:
        return 1.0 / (1.0 + math.exp(-s))
    e = math.exp(s)
    return e / (1.0 + e)


@njit(cache=True)
def _log_sigmoid(s):
    if s >= 0.0:
        return -math.log1p(math.exp(-s))
    return s - math.log1p(math.exp(s))


@njit(cache=True, nogil=True)
def _sgns_update(W, C, center, targets, n_targets, lr, grad, coef):
    """
    Ascent step for ``center`` against ``targets[:n_targets]``, positive
    first. Every gradient is taken at the pre-step rows. Returns -l.
    """
    dim = W.shape[1]
    loss = 0.0
    for j in range(n_targets):
        t = targets[j]
        s = 0.0
        for d in range(dim):
            s += W[center, d] * C[t, d]
        if j == 0:
            coef[j] = lr * (1.0 - _sigmoid(s))
            loss -= _log_sigmoid(s)
        else:
            coef[j] = -lr * _sigmoid(s)
            loss -= _log_sigmoid(-s)

    grad[:] = 0.0
    for j in range(n_targets):
        t = targets[j]
        for d in range(dim):
            grad[d] += coef[j] * C[t, d]
    for j in range(n_targets):
        t = targets[j]
        for d in range(dim):
            C[t, d] += coef[j] * W[center, d]
    for d in range(dim):
        W[center, d] += grad[d]
    return loss


@njit(cache=True)
def _bisect_right(cdf, u):
    lo, hi = 0, cdf.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if u < cdf[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def _draw_negatives(cdf, center, positive, k, out, offset):
    """
    Write ``k`` noise nodes, none equal to ``center`` or ``positive``, to
    ``out[offset:]``. Returns the number written: 0 when no other node exists.
    """
    n = cdf.shape[0]
    others = n - 1 if center == positive else n - 2
    if others <= 0:
        return 0
    for i in range(k):
        node = -1
        for _ in range(MAX_REDRAWS):
            cand = min(_bisect_right(cdf, np.random.random()), n - 1)
            if cand != center and cand != positive:
                node = cand
                break
        while node < 0:
            cand = np.random.randint(0, n)
            if cand != center and cand != positive:
                node = cand
        out[offset + i] = node
    return k


@njit(cache=True, nogil=True)
def _train_walks(W, C, tokens, bounds, first, stride, cdf, keep_prob, context, negatives, epochs,
                 lr_start, lr_end, total, losses, pairs):
    """
    SGD over walks ``first, first + stride, ...`` for ``epochs`` passes. The
    learning rate decays linearly over ``total`` pairs. Per-epoch loss sums
    and pair counts land in ``losses``/``pairs``.
    """
    n_walks = bounds.shape[0] - 1
    max_len = 1
    for w in range(n_walks):
        max_len = max(max_len, bounds[w + 1] - bounds[w])
    buf = np.empty(max_len, dtype=np.int64)
    targets = np.empty(negatives + 1, dtype=np.int64)
    grad = np.empty(W.shape[1])
    coef = np.empty(negatives + 1)
    subsample = keep_prob.shape[0] > 0

    step = 0
    for epoch in range(epochs):
        loss = 0.0
        done = 0
        for w in range(first, n_walks, stride):
            n = 0
            for i in range(bounds[w], bounds[w + 1]):
                node = tokens[i]
                if subsample and np.random.random() >= keep_prob[node]:
                    continue
                buf[n] = node
                n += 1
            for p in range(n):
                center = buf[p]
                for q in range(max(0, p - context), min(n, p + context + 1)):
                    if q == p:
                        continue
                    lr = lr_start - (lr_start - lr_end) * step / total
                    if lr < lr_end:
                        lr = lr_end
                    targets[0] = buf[q]
                    drawn = _draw_negatives(cdf, center, buf[q], negatives, targets, 1)
                    loss += _sgns_update(W, C, center, targets, drawn + 1, lr, grad, coef)
                    step += 1
                    done += 1
        losses[epoch] = loss
        pairs[epoch] = done


@njit(cache=True, nogil=True)
def _train_sequential(W, C, tokens, bounds, cdf, keep_prob, context, negatives, epochs,
                      lr_start, lr_end, total, seed, losses, pairs):
    np.random.seed(seed)
    _train_walks(W, C, tokens, bounds, 0, 1, cdf, keep_prob, context, negatives, epochs,
                 lr_start, lr_end, total, losses[0], pairs[0])


@njit(cache=True, nogil=True, parallel=True)
def _train_parallel(W, C, tokens, bounds, cdf, keep_prob, context, negatives, epochs,
                    lr_start, lr_end, total, seed, losses, pairs):
    # 无锁共享更新: 冲突行上的丢失更新是可以接受的
    workers = losses.shape[0]
    share = max(total // workers, 1)
    for worker in prange(workers):
        np.random.seed(seed + worker)
        _train_walks(W, C, tokens, bounds, worker, workers, cdf, keep_prob, context, negatives, epochs,
                     lr_start, lr_end, share, losses[worker], pairs[worker])


# ============== Training ==============

def _noise_cdf(counts: np.ndarray, exponent: float) -> np.ndarray:
    probs = np.power(counts, exponent)
    cdf = np.cumsum(probs / probs.sum())
    cdf[-1] = 1.0
    return cdf


def train(corpus: WalkCorpus, cfg: Optional[EmbeddingConfig] = None) -> EmbeddingMatrix:
    """
    Train Skip-gram embeddings on ``corpus``.

    Input rows start uniform in [-0.5/d, 0.5/d], context rows at zero. The
    learning rate decays linearly from ``lr_start`` to ``lr_end`` over the
    corpus' pairs times ``epochs`` (with subsampling enabled the schedule is
    computed on the unsampled corpus). Each pair draws ``negatives`` noise
    nodes from the unigram^``noise_exponent`` distribution.

    Raises:
        EmbeddingError: empty corpus or divergence.
    """
    cfg = cfg or EmbeddingConfig()
    if not corpus.walks:
        raise EmbeddingError("cannot train on an empty walk corpus")

    vocab = corpus.vocabulary
    index = {pid: i for i, pid in enumerate(vocab)}
    freqs = corpus.frequencies()
    counts = np.array([freqs[pid] for pid in vocab], dtype=np.float64)
    lengths = np.array([len(walk) for walk in corpus.walks], dtype=np.int64)
    tokens = np.fromiter((index[p] for walk in corpus.walks for p in walk), dtype=np.int64, count=int(lengths.sum()))
    bounds = np.concatenate(([0], np.cumsum(lengths))).astype(np.int64)

    keep_prob = np.empty(0)
    if cfg.subsample > 0:
        f = counts / counts.sum()
        keep_prob = np.minimum((np.sqrt(f / cfg.subsample) + 1.0) * cfg.subsample / f, 1.0)

    rng = np.random.default_rng(cfg.seed)
    W = rng.uniform(-0.5 / cfg.dim, 0.5 / cfg.dim, size=(len(vocab), cfg.dim))
    C = np.zeros((len(vocab), cfg.dim))
    cdf = _noise_cdf(counts, cfg.noise_exponent)
    total = max(int(sum(count_pairs(int(n), cfg.context) for n in lengths)) * cfg.epochs, 1)
    kernel_seed = int(rng.integers(0, 2**31 - 1))

    workers = min(cfg.threads, numba.config.NUMBA_NUM_THREADS) if cfg.parallel else 1
    losses = np.zeros((workers, cfg.epochs))
    pairs = np.zeros((workers, cfg.epochs), dtype=np.int64)
    args = (W, C, tokens, bounds, cdf, keep_prob, cfg.context, cfg.negatives, cfg.epochs,
            cfg.lr_start, cfg.lr_end, total, kernel_seed, losses, pairs)

    start = time.perf_counter()
    if workers > 1:
        numba.set_num_threads(workers)
        _train_parallel(*args)
    else:
        _train_sequential(*args)
    elapsed = time.perf_counter() - start

    if not (np.isfinite(W).all() and np.isfinite(C).all()):
        raise EmbeddingError("training produced non-finite embedding entries")
    for epoch in range(cfg.epochs):
        n = int(pairs[:, epoch].sum())
        logger.debug(f"Epoch {epoch + 1}/{cfg.epochs}: mean loss {losses[:, epoch].sum() / max(n, 1):.4f} over {n} pairs")

    done = int(pairs.sum())
    mode = f"parallel x{workers}" if workers > 1 else "deterministic"
    logger.info(f"Trained {len(vocab)} x {cfg.dim} embeddings on {done} pairs "
                f"({mode}) in {elapsed:.2f}s, {done / max(elapsed, 1e-9):,.0f} pairs/s")
    return EmbeddingMatrix(vocab, W, C)



# ============== Exact-softmax oracle ==============

def softmax_objective(mat: EmbeddingMatrix, pairs: Iterable[tuple[PlayerId, PlayerId]]) -> float:
    """
    Full-softmax log-likelihood sum of ``pairs`` under the input/context rows,
    i.e. sum of x'_n . x_c - log Z_c. Only sensible for tiny vocabularies.
    """
    if mat.context is None:
        raise EmbeddingError("softmax objective needs context rows")
    total = 0.0
    for center, neighbour in pairs:
        scores = mat.context @ mat[center]
        total += float(scores[mat.row(neighbour)] - logsumexp(scores))
    return total


def train_exact_softmax(corpus: WalkCorpus, dim: int = 4, context: int = 1, steps: int = 200,
                        lr: float = 0.05, seed: int = 0) -> tuple[EmbeddingMatrix, list[float]]:
    """
    Full-batch gradient ascent on the exact softmax objective.

    A brute-force reference for tiny problems (<= 30 nodes, d <= 8).
    Returns the matrix and the per-step mean objective.
    """
    vocab = corpus.vocabulary
    if len(vocab) > ORACLE_MAX_VOCAB or dim > ORACLE_MAX_DIM:
        raise EmbeddingError(f"exact softmax oracle limited to {ORACLE_MAX_VOCAB} nodes and d <= {ORACLE_MAX_DIM}")
    index = {pid: i for i, pid in enumerate(vocab)}
    pairs = [(index[a], index[b]) for a, b in extract_pairs(corpus, context)]
    if not pairs:
        raise EmbeddingError("corpus yields no training pairs")

    V = len(vocab)
    co = np.zeros((V, V))
    for a, b in pairs:
        co[a, b] += 1.0
    n_center = co.sum(axis=1)

    rng = np.random.default_rng(seed)
    W = rng.normal(scale=0.1, size=(V, dim))
    C = rng.normal(scale=0.1, size=(V, dim))
    scale = lr * V / len(pairs)
    history: list[float] = []
    for _ in range(steps):
        scores = W @ C.T
        log_probs = scores - logsumexp(scores, axis=1, keepdims=True)
        history.append(float(np.sum(co * log_probs)) / len(pairs))
        # d/dscores of sum co*log softmax = co - n_center * softmax
        resid = co - n_center[:, None] * np.exp(log_probs)
        gW = resid @ C
        gC = resid.T @ W
        W += scale * gW
        C += scale * gC
    return EmbeddingMatrix(vocab, W, C), history


# ============== Similarity ==============

def cosm(x_a: np.ndarray, x_b: np.ndarray) -> float:
    """
    Absolute cosine similarity |x_a . x_b| / (|x_a| |x_b|), in [0, 1].

    Raises:
        EmbeddingError: zero vector or mismatched lengths.
    """
    x_a = np.asarray(x_a, dtype=np.float64)
    x_b = np.asarray(x_b, dtype=np.float64)
    if x_a.shape != x_b.shape:
        raise EmbeddingError(f"vector shapes differ: {x_a.shape} vs {x_b.shape}")
    if np.array_equal(x_a, x_b):
        if not np.any(x_a):
            raise EmbeddingError("cosine similarity of a zero vector is undefined")
        return 1.0
    na, nb = np.linalg.norm(x_a), np.linalg.norm(x_b)
    if na == 0.0 or nb == 0.0:
        raise EmbeddingError("cosine similarity of a zero vector is undefined")
    return min(1.0, abs(float(x_a @ x_b)) / (na * nb))


def most_similar(mat: EmbeddingMatrix, pid: PlayerId, top_n: int = 10) -> list[tuple[PlayerId, float]]:
    """Players with the highest cosm to ``pid``, excluding ``pid`` itself."""
    x = mat[pid]
    norms = np.linalg.norm(mat.vectors, axis=1)
    nx_ = np.linalg.norm(x)
    if nx_ == 0.0:
        raise EmbeddingError(f"embedding of {pid!r} is a zero vector")
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = np.abs(mat.vectors @ x) / (norms * nx_)
    sims = np.nan_to_num(sims, nan=0.0)
    order = sorted((i for i in range(len(mat)) if mat.ids[i] != pid), key=lambda i: (-sims[i], mat.ids[i]))
    return [(mat.ids[i], float(sims[i])) for i in order[:top_n]]


# ============== word2vec text format ==============

def write_word2vec(mat: EmbeddingMatrix, sink: TextIO) -> None:
    """First line ``N d``, then ``player_id v1 ... vd`` with 6 significant digits."""
    sink.write(f"{len(mat)} {mat.dim}\n")
    for pid, vec in zip(mat.ids, mat.vectors):
        sink.write(pid + " " + " ".join(f"{v:.6g}" for v in vec) + "\n")


def read_word2vec(source: TextIO) -> EmbeddingMatrix:
    """Load an embedding file written in the word2vec text convention."""
    header = source.readline().split()
    if len(header) != 2:
        raise EmbeddingError("word2vec header must be 'N d'")
    n, d = int(header[0]), int(header[1])
    ids: list[PlayerId] = []
    rows = np.empty((n, d))
    for i in range(n):
        parts = source.readline().rstrip("\r\n").split(" ")
        if len(parts) != d + 1:
            raise EmbeddingError(f"row {i + 1}: expected {d} values, got {len(parts) - 1}")
        ids.append(parts[0])
        rows[i] = [float(v) for v in parts[1:]]
    if not np.isfinite(rows).all():
        raise EmbeddingError("embedding file contains non-finite values")
    return EmbeddingMatrix(ids, rows)


def pairwise_cosm(mat: EmbeddingMatrix, ids: Sequence[PlayerId]) -> np.ndarray:
    """cosm matrix over ``ids`` (helper for geometry checks)."""
    X = np.stack([mat[pid] for pid in ids])
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        raise EmbeddingError("zero embedding vector in selection")
    return np.abs(X @ X.T) / np.outer(norms, norms)


__all__ = [
    "EmbeddingConfig",
    "EmbeddingMatrix",
    "TrainingExample",
    "extract_pairs",
    "count_pairs",
    "sgns_loss_and_grad",
    "sgns_step",
    "train",
    "softmax_objective",
    "train_exact_softmax",
    "cosm",
    "most_similar",
    "pairwise_cosm",
    "write_word2vec",
    "read_word2vec",
]
