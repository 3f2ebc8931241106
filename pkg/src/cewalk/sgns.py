"""Skip-gram negative-sampling embeddings, trained from scratch.

Works on any whitespace-tokenized corpus, in particular walk corpora where
relation tokens enter the vocabulary exactly like words. Two training
modes: deterministic single-threaded (bitwise reproducible for a fixed
seed) and lock-free multi-threaded, which trades reproducibility for
throughput.
"""

from __future__ import annotations

import logging
import threading
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "Vocabulary",
    "EmbeddingTable",
    "TrainConfig",
    "EmptyVocabularyError",
    "TableFormatError",
    "TrainingDiverged",
    "ZeroVectorWarning",
    "build_vocabulary",
    "train",
    "pair_loss",
    "pair_gradients",
    "cosine",
    "save_table",
    "load_table",
    "read_corpus",
]


class EmptyVocabularyError(ValueError):
    """No token survived the frequency threshold."""


class TableFormatError(ValueError):
    """Embedding file does not match its declared header."""


class TrainingDiverged(RuntimeError):
    def __init__(self, step: int, learning_rate: float):
        self.step = step
        self.learning_rate = learning_rate
        super().__init__(
            f"non-finite loss at update {step} (learning rate {learning_rate:g})"
        )


class ZeroVectorWarning(UserWarning):
    """Cosine of an all-zero vector was requested; the estimate is pinned to 0."""


@dataclass
class Vocabulary:
    """Kept tokens with dense indices, ordered by descending frequency.

    Ties are broken by token text. ``total_tokens`` counts the corpus
    positions covered by kept tokens.
    """

    tokens: list[str]
    counts: np.ndarray
    min_count: int
    total_tokens: int
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {token: i for i, token in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def frequency(self, token: str) -> int:
        return int(self.counts[self.index[token]])


def build_vocabulary(sentences: Iterable[Sequence[str]], min_count: int = 5) -> Vocabulary:
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: Counter[str] = Counter()
    for sentence in sentences:
        counts.update(sentence)
    kept = sorted(
        ((token, n) for token, n in counts.items() if n >= min_count),
        key=lambda item: (-item[1], item[0]),
    )
    if not kept:
        raise EmptyVocabularyError(
            f"no token reaches min_count={min_count} (distinct tokens: {len(counts)})"
        )
    tokens = [token for token, _ in kept]
    freqs = np.array([n for _, n in kept], dtype=np.int64)
    return Vocabulary(tokens, freqs, min_count, int(freqs.sum()))


@dataclass
class EmbeddingTable:
    """Token vectors; ``input_vectors`` are the embeddings used for similarity."""

    vocabulary: Vocabulary
    input_vectors: np.ndarray
    output_vectors: np.ndarray | None = None

    def __post_init__(self):
        if self.input_vectors.ndim != 2 or len(self.input_vectors) != len(self.vocabulary):
            raise ValueError("input_vectors must be |vocabulary| x dimension")
        if not np.isfinite(self.input_vectors).all():
            raise ValueError("embedding table contains non-finite values")
        if self.output_vectors is not None and not np.isfinite(self.output_vectors).all():
            raise ValueError("embedding table contains non-finite output values")

    @property
    def dimension(self) -> int:
        return self.input_vectors.shape[1]

    def __contains__(self, token: str) -> bool:
        return token in self.vocabulary.index

    def vector(self, token: str) -> np.ndarray:
        """Embedding of *token*; unknown tokens raise ``KeyError``."""
        try:
            return self.input_vectors[self.vocabulary.index[token]]
        except KeyError:
            raise KeyError(f"token not in vocabulary: {token!r}") from None

    def get(self, token: str) -> np.ndarray | None:
        i = self.vocabulary.index.get(token)
        return None if i is None else self.input_vectors[i]


@dataclass(frozen=True)
class TrainConfig:
    dimension: int = 300
    window: int = 7
    negatives: int = 5
    epochs: int = 5
    initial_learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    subsample_t: float = 1e-4
    unigram_power: float = 0.75
    min_count: int = 5
    rng_seed: int = 1

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.initial_learning_rate <= 0 or self.min_learning_rate <= 0:
            raise ValueError("learning rates must be positive")
        if self.subsample_t < 0:
            raise ValueError("subsample_t must be >= 0 (0 disables)")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def pair_loss(center: np.ndarray, positive: np.ndarray, negatives: np.ndarray) -> float:
    """Negative-sampling loss of one (center, context) pair.

    ``-ln sigmoid(c.p) - sum_i ln sigmoid(-c.n_i)``, computed via
    ``log1p``-stable softplus.
    """
    pos_logit = float(center @ positive)
    neg_logits = negatives @ center
    return float(np.logaddexp(0.0, -pos_logit) + np.logaddexp(0.0, neg_logits).sum())


def pair_gradients(
    center: np.ndarray, positive: np.ndarray, negatives: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of :func:`pair_loss` w.r.t. all three arguments."""
    g_pos = _sigmoid(np.array([center @ positive]))[0] - 1.0
    g_negs = _sigmoid(negatives @ center)
    grad_center = g_pos * positive + g_negs @ negatives
    grad_positive = g_pos * center
    grad_negatives = np.outer(g_negs, center)
    return grad_center, grad_positive, grad_negatives


def _subsample_keep_probabilities(vocab: Vocabulary, t: float) -> np.ndarray | None:
    if t <= 0:
        return None
    freq = vocab.counts / vocab.total_tokens
    keep = (np.sqrt(freq / t) + 1.0) * (t / freq)
    return np.minimum(keep, 1.0)


def _noise_cumulative(vocab: Vocabulary, power: float) -> np.ndarray:
    weights = vocab.counts.astype(np.float64) ** power
    cum = np.cumsum(weights)
    cum /= cum[-1]
    cum[-1] = 1.0
    return cum


class _NoiseSampler:
    """Draws token indices with probability proportional to count**power."""

    def __init__(self, vocab: Vocabulary, power: float):
        self.cumulative = _noise_cumulative(vocab, power)

    def probabilities(self) -> np.ndarray:
        return np.diff(self.cumulative, prepend=0.0)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        idx = np.searchsorted(self.cumulative, rng.random(n), side="right")
        return np.minimum(idx, len(self.cumulative) - 1)


def _encode_corpus(sentences: Iterable[Sequence[str]], vocab: Vocabulary) -> list[np.ndarray]:
    index = vocab.index
    return [
        np.array([index[t] for t in sentence if t in index], dtype=np.int64)
        for sentence in sentences
    ]


def _train_span(
    encoded: Sequence[np.ndarray],
    in_vecs: np.ndarray,
    out_vecs: np.ndarray,
    sampler: _NoiseSampler,
    keep_prob: np.ndarray | None,
    cfg: TrainConfig,
    rng: np.random.Generator,
    progress_hook: Callable[[int, float], None] | None = None,
) -> int:
    """Run all epochs over *encoded*, updating the shared arrays in place."""
    k = cfg.negatives
    labels = np.zeros(k + 1)
    labels[0] = 1.0
    idx = np.empty(k + 1, dtype=np.int64)
    vocab_size = len(in_vecs)
    total_ticks = max(1, cfg.epochs * sum(len(ids) for ids in encoded))
    tick = 0
    updates = 0
    for _ in range(cfg.epochs):
        for ids in encoded:
            alpha = max(
                cfg.min_learning_rate,
                cfg.initial_learning_rate * (1.0 - tick / total_ticks),
            )
            if keep_prob is None or len(ids) == 0:
                kept = ids
            else:
                kept = ids[rng.random(len(ids)) < keep_prob[ids]]
            for pos in range(len(kept)):
                center = kept[pos]
                radius = int(rng.integers(1, cfg.window + 1))
                lo = max(0, pos - radius)
                for ctx_pos in range(lo, min(len(kept), pos + radius + 1)):
                    if ctx_pos == pos:
                        continue
                    ctx = kept[ctx_pos]
                    if vocab_size < 2:
                        continue
                    idx[0] = ctx
                    filled = 1
                    while filled < k + 1:
                        draws = sampler.draw(rng, k + 1 - filled)
                        for w in draws:
                            if w != ctx:
                                idx[filled] = w
                                filled += 1
                    l1 = in_vecs[center]
                    l2 = out_vecs[idx]
                    logits = l2 @ l1
                    if not np.isfinite(logits).all():
                        raise TrainingDiverged(updates, alpha)
                    g = (labels - _sigmoid(logits)) * alpha
                    np.add.at(out_vecs, idx, g[:, None] * l1[None, :])
                    in_vecs[center] += l2.T @ g
                    updates += 1
            tick += len(ids)
            if progress_hook is not None:
                progress_hook(tick, alpha)
    return updates


def train(
    sentences: Sequence[Sequence[str]],
    cfg: TrainConfig,
    *,
    threads: int = 1,
    progress_hook: Callable[[int, float], None] | None = None,
) -> EmbeddingTable:
    """Train an embedding table on a tokenized corpus.

    With ``threads=1`` the result is bitwise reproducible for a fixed
    ``cfg.rng_seed``. With more threads, workers update the shared weight
    arrays without locking (asynchronous SGD); the result is then not
    reproducible and the progress hook is unavailable.
    """
    vocab = build_vocabulary(sentences, cfg.min_count)
    rng = np.random.default_rng(cfg.rng_seed)
    in_vecs = (rng.random((len(vocab), cfg.dimension)) - 0.5) / cfg.dimension
    out_vecs = np.zeros((len(vocab), cfg.dimension))
    sampler = _NoiseSampler(vocab, cfg.unigram_power)
    keep_prob = _subsample_keep_probabilities(vocab, cfg.subsample_t)
    encoded = _encode_corpus(sentences, vocab)

    if threads <= 1:
        _train_span(encoded, in_vecs, out_vecs, sampler, keep_prob, cfg, rng, progress_hook)
    else:
        if progress_hook is not None:
            raise ValueError("progress_hook requires single-threaded training")
        shards = [encoded[i::threads] for i in range(threads)]
        workers = [
            threading.Thread(
                target=_train_span,
                args=(
                    shard,
                    in_vecs,
                    out_vecs,
                    sampler,
                    keep_prob,
                    cfg,
                    np.random.default_rng([cfg.rng_seed, worker_id]),
                ),
            )
            for worker_id, shard in enumerate(shards)
            if shard
        ]
        for w in workers:
            w.start()
        for w in workers:
            w.join()
    return EmbeddingTable(vocab, in_vecs, out_vecs)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; all-zero input yields 0.0 with a ZeroVectorWarning."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        warnings.warn("cosine of an all-zero vector is defined as 0", ZeroVectorWarning)
        return 0.0
    value = float(u @ v) / (nu * nv)
    return min(1.0, max(-1.0, value))


def _write_vectors(out: TextIO, tokens: Sequence[str], matrix: np.ndarray, tag: str | None = None) -> None:
    if tag is not None:
        out.write(tag + "\n")
    out.write(f"{len(tokens)} {matrix.shape[1]}\n")
    for token, row in zip(tokens, matrix):
        out.write(token + " " + " ".join(f"{x:.9g}" for x in row) + "\n")


def _read_vectors(stream: TextIO, tag: str | None = None) -> tuple[list[str], np.ndarray]:
    header = stream.readline()
    if tag is not None:
        if header.strip() != tag:
            raise TableFormatError(f"expected leading {tag!r} tag")
        header = stream.readline()
    fields = header.split()
    if len(fields) != 2 or not all(f.isdigit() for f in fields):
        raise TableFormatError(f"malformed header line: {header.strip()!r}")
    size, dim = int(fields[0]), int(fields[1])
    tokens: list[str] = []
    matrix = np.empty((size, dim), dtype=np.float64)
    seen: set[str] = set()
    for i in range(size):
        line = stream.readline()
        if not line:
            raise TableFormatError(f"truncated file: expected {size} vectors, found {i}")
        parts = line.split()
        if len(parts) != dim + 1:
            raise TableFormatError(
                f"vector line {i + 1} has {len(parts) - 1} values, expected {dim}"
            )
        token = parts[0]
        if token in seen:
            raise TableFormatError(f"duplicate token {token!r}")
        seen.add(token)
        tokens.append(token)
        try:
            matrix[i] = [float(x) for x in parts[1:]]
        except ValueError as exc:
            raise TableFormatError(f"bad value on vector line {i + 1}: {exc}") from exc
    if stream.readline().strip():
        raise TableFormatError("trailing content after the declared vectors")
    if not np.isfinite(matrix).all():
        raise TableFormatError("table contains non-finite values")
    return tokens, matrix


def save_table(table: EmbeddingTable, path: str | Path) -> None:
    """Write the lookup vectors as text, 9 significant digits per value."""
    with open(path, "w", encoding="utf-8") as out:
        _write_vectors(out, table.vocabulary.tokens, table.input_vectors)


def load_table(path: str | Path) -> EmbeddingTable:
    """Read a table written by :func:`save_table`.

    Token frequencies are not part of the format, so the loaded vocabulary
    carries placeholder counts of 1.
    """
    with open(path, "r", encoding="utf-8") as stream:
        tokens, matrix = _read_vectors(stream)
    vocab = Vocabulary(tokens, np.ones(len(tokens), dtype=np.int64), 1, len(tokens))
    return EmbeddingTable(vocab, matrix)


def read_corpus(path: str | Path) -> list[list[str]]:
    """Load a one-sentence-per-line whitespace-tokenized corpus."""
    with open(path, "r", encoding="utf-8") as stream:
        return [line.split() for line in stream]
