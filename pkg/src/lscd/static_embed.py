"""Skip-gram negative sampling embeddings over a single corpus.

The trainer follows the classic formulation: dynamic context windows
(effective size uniform in 1..w), frequency subsampling with drop
probability 1 - sqrt(s/f) floored at 0, noise distribution proportional
to unigram frequency^0.75, sigmoid clamped outside [-6, 6], and a linear
learning-rate decay from lr down to lr/10000 over all training pairs.

The hot loop is a numba kernel.  Randomness comes from two independent
inline LCG streams per worker shard: one drives the corpus walk
(subsampling and window draws), one draws negative samples.  A counting
pass replays the walk without touching the weights, which yields the
exact number of training pairs so the decay schedule needs no estimate.
With workers=1 training is fully deterministic; more workers update the
weight matrices hogwild-style and results vary slightly across runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numba
import numpy as np
from numba import njit, prange

from .corpus import Corpus, Period

_LCG_A = np.uint64(6364136223846793005)
_LCG_C = np.uint64(1442695040888963407)
_SHIFT_11 = np.uint64(11)
_INV_2_53 = 1.0 / 9007199254740992.0
_SHARD_SALT = np.uint64(0x9E3779B97F4A7C15)
_NEG_SALT = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class SgnsConfig:
    """Hyperparameters of one training run."""

    dim: int = 300
    window: int = 10
    negative: int = 5
    subsample: float | None = 1e-3
    epochs: int = 5
    min_count: int = 39
    lr: float = 0.025
    workers: int = 1
    seed: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.negative < 1:
            raise ValueError("negative must be >= 1")
        if self.subsample is not None and not 0 < self.subsample < 1:
            raise ValueError("subsample must be in (0, 1) or None to disable")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class VectorSpace:
    """A word embedding matrix with its vocabulary."""

    words: list[str]
    vectors: np.ndarray
    config: SgnsConfig | None = None
    period: Period | None = None
    word_index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.words):
            raise ValueError(
                f"vectors shape {self.vectors.shape} does not match {len(self.words)} words"
            )
        self.word_index = {w: i for i, w in enumerate(self.words)}
        if len(self.word_index) != len(self.words):
            raise ValueError("duplicate words in vocabulary")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.word_index

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[self.word_index[word]]


@njit(inline="always")
def _lcg(state):
    return state * _LCG_A + _LCG_C


@njit(inline="always")
def _u01(state):
    return np.float64(state >> _SHIFT_11) * _INV_2_53


@njit(cache=True, parallel=True)
def _sgns_pass(
    tokens,
    offsets,
    shard_bounds,
    keep_prob,
    noise_cdf,
    syn0,
    syn1,
    window,
    negative,
    lr0,
    epochs,
    base_seed,
    shard_totals,
    do_train,
):
    # One pass over the corpus walk.  With do_train=False only the walk
    # RNG stream advances and the per-shard pair counts are returned;
    # with do_train=True the identical walk is replayed and each pair
    # updates the weights at a learning rate decayed over the shard total.
    n_shards = shard_bounds.shape[0] - 1
    n_vocab = noise_cdf.shape[0]
    pair_counts = np.zeros(n_shards, dtype=np.int64)
    lr_min = lr0 / 10000.0
    dim = syn0.shape[1]
    for sh in prange(n_shards):
        walk = (np.uint64(base_seed) + np.uint64(sh + 1) * _SHARD_SALT) | np.uint64(1)
        neg_state = walk ^ _NEG_SALT
        walk = _lcg(walk)
        neg_state = _lcg(neg_state)
        maxlen = 1
        for si in range(shard_bounds[sh], shard_bounds[sh + 1]):
            length = offsets[si + 1] - offsets[si]
            if length > maxlen:
                maxlen = length
        sen = np.empty(maxlen, dtype=np.int32)
        neu1e = np.empty(dim, dtype=np.float32)
        denom = shard_totals[sh] - 1
        if denom < 1:
            denom = 1
        done = np.int64(0)
        for _ep in range(epochs):
            for si in range(shard_bounds[sh], shard_bounds[sh + 1]):
                n = 0
                for k in range(offsets[si], offsets[si + 1]):
                    t = tokens[k]
                    if t < 0:
                        continue
                    kp = keep_prob[t]
                    if kp < 1.0:
                        walk = _lcg(walk)
                        if _u01(walk) >= kp:
                            continue
                    sen[n] = t
                    n += 1
                for i in range(n):
                    walk = _lcg(walk)
                    ws = 1 + np.int64(_u01(walk) * window)
                    if ws > window:
                        ws = window
                    lo = i - ws
                    if lo < 0:
                        lo = 0
                    hi = i + ws
                    if hi > n - 1:
                        hi = n - 1
                    center = sen[i]
                    for j in range(lo, hi + 1):
                        if j == i:
                            continue
                        ctx = sen[j]
                        if do_train:
                            lr = lr0 + (lr_min - lr0) * (np.float64(done) / np.float64(denom))
                            if lr < lr_min:
                                lr = lr_min
                            for dd in range(dim):
                                neu1e[dd] = np.float32(0.0)
                            for ni in range(negative + 1):
                                if ni == 0:
                                    target = np.int64(ctx)
                                    label = 1.0
                                else:
                                    neg_state = _lcg(neg_state)
                                    u = _u01(neg_state)
                                    target = np.searchsorted(noise_cdf, u, side="right")
                                    if target >= n_vocab:
                                        target = n_vocab - 1
                                    if target == ctx:
                                        continue
                                    label = 0.0
                                dot = 0.0
                                for dd in range(dim):
                                    dot += np.float64(syn0[center, dd]) * np.float64(
                                        syn1[target, dd]
                                    )
                                if dot > 6.0:
                                    sig = 1.0
                                elif dot < -6.0:
                                    sig = 0.0
                                else:
                                    sig = 1.0 / (1.0 + math.exp(-dot))
                                g = np.float32((label - sig) * lr)
                                for dd in range(dim):
                                    tmp = syn1[target, dd]
                                    neu1e[dd] += g * tmp
                                    syn1[target, dd] = tmp + g * syn0[center, dd]
                            for dd in range(dim):
                                syn0[center, dd] += neu1e[dd]
                        done += 1
        pair_counts[sh] = done
    return pair_counts


def _shard_bounds(offsets: np.ndarray, workers: int) -> np.ndarray:
    """Split sentences into contiguous shards with near-equal token mass."""
    n_sent = offsets.shape[0] - 1
    workers = min(workers, max(1, n_sent))
    total = offsets[-1]
    bounds = [0]
    for w in range(1, workers):
        cut = int(np.searchsorted(offsets, total * w // workers))
        cut = max(bounds[-1], min(cut, n_sent))
        bounds.append(cut)
    bounds.append(n_sent)
    return np.asarray(bounds, dtype=np.int64)


def train_sgns(corpus: Corpus, config: SgnsConfig | None = None) -> VectorSpace:
    """Train a skip-gram space on the lemma layer of one corpus."""
    config = config or SgnsConfig()
    counts = {}
    for sent in corpus.sentences:
        for lemma in sent.effective_lemmas:
            counts[lemma] = counts.get(lemma, 0) + 1
    vocab = sorted(
        (w for w, c in counts.items() if c >= config.min_count),
        key=lambda w: (-counts[w], w),
    )
    if not vocab:
        raise ValueError(
            f"no lemma reaches min_count={config.min_count} in corpus {corpus.id!r}"
        )
    index = {w: i for i, w in enumerate(vocab)}
    freq = np.array([counts[w] for w in vocab], dtype=np.float64)
    train_words = freq.sum()

    if config.subsample is not None:
        keep_prob = np.minimum(1.0, np.sqrt(config.subsample / (freq / train_words)))
    else:
        keep_prob = np.ones_like(freq)

    noise = freq ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())
    noise_cdf[-1] = 1.0

    flat: list[int] = []
    offsets = [0]
    for sent in corpus.sentences:
        flat.extend(index.get(lemma, -1) for lemma in sent.effective_lemmas)
        offsets.append(len(flat))
    tokens = np.asarray(flat, dtype=np.int32)
    offsets = np.asarray(offsets, dtype=np.int64)
    bounds = _shard_bounds(offsets, config.workers)

    numba.set_num_threads(max(1, min(config.workers, numba.config.NUMBA_NUM_THREADS)))

    dummy = np.zeros((1, 1), dtype=np.float32)
    shard_totals = _sgns_pass(
        tokens, offsets, bounds, keep_prob, noise_cdf, dummy, dummy.copy(),
        config.window, config.negative, config.lr, config.epochs,
        config.seed, np.zeros(bounds.shape[0] - 1, dtype=np.int64), False,
    )
    if int(shard_totals.sum()) == 0:
        raise ValueError("corpus produced no training pairs (sentences too short?)")

    rng = np.random.default_rng(config.seed)
    syn0 = ((rng.random((len(vocab), config.dim)) - 0.5) / config.dim).astype(np.float32)
    syn1 = np.zeros((len(vocab), config.dim), dtype=np.float32)
    _sgns_pass(
        tokens, offsets, bounds, keep_prob, noise_cdf, syn0, syn1,
        config.window, config.negative, config.lr, config.epochs,
        config.seed, shard_totals, True,
    )
    if not np.isfinite(syn0).all():
        raise RuntimeError("training diverged: non-finite values in embedding matrix")
    return VectorSpace(words=vocab, vectors=syn0, config=config, period=corpus.period)


def save_space(space: VectorSpace, path: str | Path) -> None:
    """Write a space as text: '<vocab> <dim>' header, then one word per row.

    Values use 9 significant digits, enough to round-trip float32 exactly.
    Config and period go to a '<path>.meta.json' sidecar so the vector
    file itself stays plain.
    """
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(space.words)} {space.dim}\n")
        for word, row in zip(space.words, space.vectors):
            if " " in word or "\t" in word:
                raise ValueError(f"word {word!r} contains whitespace, cannot serialize")
            fh.write(word + " " + " ".join(f"{v:.9g}" for v in row) + "\n")
    meta: dict = {}
    if space.config is not None:
        meta["config"] = asdict(space.config)
    if space.period is not None:
        meta["period"] = space.period.value
    if meta:
        with open(f"{path}.meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)


def load_space(path: str | Path, period: Period | None = None) -> VectorSpace:
    """Read a space written by :func:`save_space`.

    The sidecar metadata file is optional; an explicit ``period`` argument
    overrides nothing and only fills the gap when no sidecar exists.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected '<vocab> <dim>' header")
        n_words, dim = int(header[0]), int(header[1])
        words = []
        vectors = np.empty((n_words, dim), dtype=np.float32)
        for i in range(n_words):
            parts = fh.readline().split()
            if len(parts) != dim + 1:
                raise ValueError(f"{path}: row {i + 2} has {len(parts) - 1} values, expected {dim}")
            words.append(parts[0])
            vectors[i] = [float(v) for v in parts[1:]]
    config = None
    meta_path = Path(f"{path}.meta.json")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        if "config" in meta:
            config = SgnsConfig(**meta["config"])
        if "period" in meta:
            period = Period(meta["period"])
    return VectorSpace(words=words, vectors=vectors, config=config, period=period)
