"""Synthetic corpus pairs with planted sense change.

Builds two single-period corpora over a shared topical vocabulary plus
pseudoword targets.  Changed pseudowords draw their context from one
topic in the first period and a different topic in the second; stable
pseudowords keep their topic.  Distributional models should therefore
rank changed targets above stable ones, which gives an end-to-end
ground truth that does not depend on any model output.
"""
from __future__ import annotations

import random
from pathlib import Path

from lscd.corpus import Corpus, Period, Sentence

N_TOPICS = 20
WORDS_PER_TOPIC = 50
N_FILLER = 400


def _topic_words(topic: int) -> list[str]:
    return [f"t{topic:02d}w{i:02d}" for i in range(WORDS_PER_TOPIC)]


class SynthSpec:
    """Frozen plan for one corpus pair: which target uses which topic."""

    def __init__(self, seed: int = 0, n_changed: int = 10, n_stable: int = 40):
        rng = random.Random(seed)
        self.seed = seed
        self.changed = [f"xchg{i}" for i in range(n_changed)]
        self.stable = [f"xstb{i}" for i in range(n_stable)]
        self.topic_of: dict[tuple[str, Period], int] = {}
        for lemma in self.changed:
            a = rng.randrange(N_TOPICS)
            b = (a + rng.randrange(1, N_TOPICS)) % N_TOPICS
            self.topic_of[(lemma, Period.C1)] = a
            self.topic_of[(lemma, Period.C2)] = b
        for lemma in self.stable:
            t = rng.randrange(N_TOPICS)
            self.topic_of[(lemma, Period.C1)] = t
            self.topic_of[(lemma, Period.C2)] = t

    @property
    def targets(self) -> list[str]:
        return self.changed + self.stable

    @property
    def gold(self) -> dict[str, bool]:
        out = {lemma: True for lemma in self.changed}
        out.update({lemma: False for lemma in self.stable})
        return out


def _build_period(
    spec: SynthSpec,
    period: Period,
    corpus_id: str,
    min_tokens: int,
    sentences_per_target: int,
) -> Corpus:
    rng = random.Random(f"{spec.seed}|{period.value}")
    topics = [_topic_words(t) for t in range(N_TOPICS)]
    # Zipf-weighted filler: rank r drawn with probability proportional to 1/r.
    filler = [f"fill{i:03d}" for i in range(N_FILLER)]
    weights = [1.0 / (r + 1) for r in range(N_FILLER)]

    def topic_sentence(topic: int, length: int) -> list[str]:
        words = rng.choices(topics[topic], k=length)
        n_fill = rng.randrange(0, 3)
        for _ in range(n_fill):
            words[rng.randrange(len(words))] = rng.choices(filler, weights)[0]
        return words

    sentences: list[Sentence] = []
    for lemma in spec.targets:
        topic = spec.topic_of[(lemma, period)]
        for _ in range(sentences_per_target):
            words = topic_sentence(topic, rng.randrange(9, 13))
            words.insert(rng.randrange(len(words) + 1), lemma)
            sentences.append(Sentence(tuple(words)))
    total = sum(len(s.surface) for s in sentences)
    while total < min_tokens:
        words = topic_sentence(rng.randrange(N_TOPICS), rng.randrange(8, 15))
        sentences.append(Sentence(tuple(words)))
        total += len(words)
    rng.shuffle(sentences)
    return Corpus(corpus_id, period, tuple(sentences))


def make_corpus_pair(
    seed: int = 0,
    min_tokens: int = 200_000,
    sentences_per_target: int = 150,
    n_changed: int = 10,
    n_stable: int = 40,
) -> tuple[Corpus, Corpus, SynthSpec]:
    spec = SynthSpec(seed, n_changed=n_changed, n_stable=n_stable)
    c1 = _build_period(spec, Period.C1, "synth1", min_tokens, sentences_per_target)
    c2 = _build_period(spec, Period.C2, "synth2", min_tokens, sentences_per_target)
    return c1, c2, spec


def write_corpus_tsv(corpus: Corpus, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sentence in corpus.sentences:
            fh.write(" ".join(sentence.surface) + "\n")
