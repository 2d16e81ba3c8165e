import random

import pytest

from lscd.corpus import Corpus, Period, Sentence


def make_topic_pair(
    seed: int = 11,
    targets: dict[str, tuple[int, int]] | None = None,
    n_topics: int = 3,
    words_per_topic: int = 20,
    sentences_per_target: int = 80,
    background: int = 150,
) -> tuple[Corpus, Corpus]:
    """Small corpus pair where each target draws from a per-period topic.

    ``targets`` maps lemma -> (topic in C1, topic in C2); identical topics
    give a stable word, distinct topics a changed one.
    """
    targets = targets or {"alpha": (0, 0), "beta": (1, 2)}
    topics = [
        [f"k{t}w{i}" for i in range(words_per_topic)] for t in range(n_topics)
    ]

    def build(period: Period, which: int, corpus_id: str) -> Corpus:
        rng = random.Random(f"{seed}|{which}")
        sentences = []
        for lemma, assignment in targets.items():
            topic = topics[assignment[which]]
            for _ in range(sentences_per_target):
                words = rng.choices(topic, k=7)
                words.insert(rng.randrange(len(words) + 1), lemma)
                sentences.append(Sentence(tuple(words)))
        for _ in range(background):
            topic = topics[rng.randrange(n_topics)]
            sentences.append(Sentence(tuple(rng.choices(topic, k=8))))
        rng.shuffle(sentences)
        return Corpus(corpus_id, period, tuple(sentences))

    return build(Period.C1, 0, "tiny1"), build(Period.C2, 1, "tiny2")


@pytest.fixture
def tiny_pair():
    return make_topic_pair()
