"""Diachronic corpus handling.

Loads tokenized corpora (one sentence per line, optional lemma and POS
columns), builds joint vocabularies with per-period frequencies, samples
usage sentences for targets, and applies the quality filter that keeps
only well-formed noun/verb/adjective candidates.
"""

from __future__ import annotations

import hashlib
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence


class Period(str, Enum):
    """One of the two time periods of a diachronic corpus pair."""

    C1 = "C1"
    C2 = "C2"

    @property
    def grouping(self) -> int:
        """Integer code used in usage TSV exports (1 for C1, 2 for C2)."""
        return 1 if self is Period.C1 else 2

    @classmethod
    def from_grouping(cls, grouping: int | str) -> "Period":
        g = str(grouping)
        if g == "1":
            return cls.C1
        if g == "2":
            return cls.C2
        raise ValueError(f"grouping must be 1 or 2, got {grouping!r}")


@dataclass(frozen=True)
class Sentence:
    """A tokenized sentence with optional lemma and POS layers."""

    surface: tuple[str, ...]
    lemmas: tuple[str, ...] | None = None
    pos_tags: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.lemmas is not None and len(self.lemmas) != len(self.surface):
            raise ValueError(
                f"lemma layer has {len(self.lemmas)} tokens, surface has {len(self.surface)}"
            )
        if self.pos_tags is not None and len(self.pos_tags) != len(self.surface):
            raise ValueError(
                f"POS layer has {len(self.pos_tags)} tokens, surface has {len(self.surface)}"
            )

    @property
    def effective_lemmas(self) -> tuple[str, ...]:
        """Lemma layer, falling back to lowercased surface forms."""
        if self.lemmas is not None:
            return self.lemmas
        return tuple(t.lower() for t in self.surface)

    def __len__(self) -> int:
        return len(self.surface)


@dataclass
class Corpus:
    """A time-specific corpus: a sequence of sentences tagged with a period."""

    id: str
    period: Period
    sentences: list[Sentence]

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def token_count(self) -> int:
        return sum(len(s) for s in self.sentences)


@dataclass
class VocabEntry:
    """Joint vocabulary entry with per-period lemma frequencies."""

    lemma: str
    freq_c1: int
    freq_c2: int
    pos: str | None = None

    @property
    def freq_total(self) -> int:
        return self.freq_c1 + self.freq_c2


@dataclass(frozen=True)
class UsageSample:
    """One sentence containing a target word, with the target token index."""

    usage_id: str
    lemma: str
    context: str
    target_index: int
    period: Period

    def __post_init__(self):
        n_tokens = len(self.context.split(" "))
        if not 0 <= self.target_index < n_tokens:
            raise ValueError(
                f"target_index {self.target_index} out of bounds for {n_tokens}-token context"
            )

    @property
    def tokens(self) -> list[str]:
        return self.context.split(" ")


@dataclass(frozen=True)
class FilterVerdict:
    """Outcome of the candidate filter: pass, or reject with the failing rule."""

    passed: bool
    reason: str | None = None  # "pos" | "usage_quality"
    detail: str = ""

    def __str__(self) -> str:
        return "pass" if self.passed else f"reject:{self.reason}"


def load_corpus(path: str | Path, period: Period, corpus_id: str | None = None) -> Corpus:
    """Parse a corpus file into a :class:`Corpus`.

    Format: UTF-8, one sentence per line, up to three tab-separated columns
    (surface forms, lemmas, POS tags), each a space-joined token sequence.
    Lines whose columns disagree in token count raise with the line number.
    """
    path = Path(path)
    sentences: list[Sentence] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) > 3:
                raise ValueError(f"{path}:{lineno}: expected at most 3 columns, got {len(cols)}")
            surface = tuple(cols[0].split())
            if not surface:
                continue
            lemmas = tuple(cols[1].split()) if len(cols) >= 2 else None
            pos_tags = tuple(cols[2].split()) if len(cols) >= 3 else None
            if lemmas is not None and len(lemmas) != len(surface):
                raise ValueError(
                    f"{path}:{lineno}: {len(surface)} surface tokens but {len(lemmas)} lemmas"
                )
            if pos_tags is not None and len(pos_tags) != len(surface):
                raise ValueError(
                    f"{path}:{lineno}: {len(surface)} surface tokens but {len(pos_tags)} POS tags"
                )
            sentences.append(Sentence(surface, lemmas, pos_tags))
    if not sentences:
        raise ValueError(f"{path}: corpus file contains no sentences")
    return Corpus(id=corpus_id or path.stem, period=period, sentences=sentences)


def build_vocabulary(c1: Corpus, c2: Corpus) -> list[VocabEntry]:
    """Joint vocabulary over the lemma layers of both corpora.

    One entry per lemma occurring in either corpus, with per-period counts
    and the majority POS tag (when a POS layer exists anywhere).
    """
    counts = {Period.C1: Counter(), Period.C2: Counter()}
    pos_counts: dict[str, Counter] = defaultdict(Counter)
    for corpus in (c1, c2):
        ctr = counts[corpus.period]
        for sent in corpus.sentences:
            lemmas = sent.effective_lemmas
            ctr.update(lemmas)
            if sent.pos_tags is not None:
                for lemma, tag in zip(lemmas, sent.pos_tags):
                    pos_counts[lemma][tag] += 1
    entries = []
    for lemma in sorted(set(counts[Period.C1]) | set(counts[Period.C2])):
        pos = None
        if lemma in pos_counts:
            # majority tag; ties broken by count then lexicographically for determinism
            pos = min(pos_counts[lemma].items(), key=lambda kv: (-kv[1], kv[0]))[0]
        entries.append(
            VocabEntry(
                lemma=lemma,
                freq_c1=counts[Period.C1][lemma],
                freq_c2=counts[Period.C2][lemma],
                pos=pos,
            )
        )
    return entries


def intersection_only(vocab: Iterable[VocabEntry]) -> list[VocabEntry]:
    """Entries attested in both periods (the discovery target vocabulary)."""
    return [e for e in vocab if e.freq_c1 >= 1 and e.freq_c2 >= 1]


def _derive_seed(seed: int, *parts: str) -> int:
    """Stable 64-bit child seed from a base seed and string labels."""
    h = hashlib.sha256(("|".join(parts)).encode("utf-8")).digest()
    return seed ^ int.from_bytes(h[:8], "big")


def extract_usages(
    corpus: Corpus, lemma: str, max_n: int = 100, seed: int = 0
) -> list[UsageSample]:
    """Sample up to ``max_n`` sentences containing ``lemma`` from a corpus.

    Sentences are the sampling unit: a sentence yields at most one usage,
    with one occurrence chosen uniformly when the lemma appears several
    times.  Sampling is uniform without replacement and deterministic
    under ``seed``.  An absent lemma yields an empty list.
    """
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    occurrences: list[tuple[int, list[int]]] = []
    for idx, sent in enumerate(corpus.sentences):
        positions = [i for i, lm in enumerate(sent.effective_lemmas) if lm == lemma]
        if positions:
            occurrences.append((idx, positions))
    rng = random.Random(_derive_seed(seed, "usages", lemma, corpus.period.value))
    if len(occurrences) > max_n:
        chosen = rng.sample(range(len(occurrences)), max_n)
        occurrences = [occurrences[i] for i in sorted(chosen)]
    usages = []
    for idx, positions in occurrences:
        sent = corpus.sentences[idx]
        target_index = positions[0] if len(positions) == 1 else rng.choice(positions)
        usages.append(
            UsageSample(
                usage_id=f"{lemma}-{corpus.period.value}-{idx}",
                lemma=lemma,
                context=" ".join(sent.surface),
                target_index=target_index,
                period=corpus.period,
            )
        )
    return usages


# Tag prefixes covering UPOS plus the Penn/STTS tagsets used by common taggers.
def classify_pos(tag: str | None) -> str | None:
    """Collapse a POS tag into noun/verb/adjective/proper_noun/other.

    Returns None when no tag is available (degraded mode: the POS rule
    then rejects nothing).
    """
    if tag is None:
        return None
    t = tag.upper()
    if t == "PROPN" or t.startswith(("NE", "NNP")):
        return "proper_noun"
    if t == "NOUN" or t.startswith("NN"):
        return "noun"
    if t in ("VERB", "AUX") or t.startswith(("VB", "VV", "VM", "VA")):
        return "verb"
    if t == "ADJ" or t.startswith(("JJ", "ADJA", "ADJD")):
        return "adjective"
    return "other"


def make_wordlist_language_check(
    wordlist: Iterable[str], min_known_fraction: float = 0.05
) -> Callable[[UsageSample], bool]:
    """Heuristic target-language detector from a known-word list.

    The returned callable flags a usage as *non-target-language* when the
    fraction of its tokens found in the wordlist falls below
    ``min_known_fraction``.
    """
    known = {w.lower() for w in wordlist}

    def is_target_language(usage: UsageSample) -> bool:
        tokens = usage.tokens
        if not tokens:
            return False
        hits = sum(1 for t in tokens if t.lower() in known)
        return hits / len(tokens) >= min_known_fraction

    return is_target_language


def is_punctuation_token(token: str) -> bool:
    """A token is punctuation when every character is non-alphanumeric."""
    return bool(token) and all(not ch.isalnum() for ch in token)


def punctuation_ratio(usage: UsageSample) -> float:
    tokens = usage.tokens
    if not tokens:
        return 0.0
    return sum(1 for t in tokens if is_punctuation_token(t)) / len(tokens)


ALLOWED_POS_CLASSES = frozenset({"noun", "verb", "adjective"})


def filter_candidate(
    lemma: str,
    usages: Sequence[UsageSample],
    vocab: VocabEntry,
    language_check: Callable[[UsageSample], bool] | None = None,
    punct_ratio_max: float = 0.25,
    flagged_fraction_max: float = 0.10,
) -> FilterVerdict:
    """Quality filter for predicted changing words.

    Rejects candidates whose POS class is not noun/verb/adjective, and
    candidates where strictly more than ``flagged_fraction_max`` of usages
    are non-target-language or contain strictly more than
    ``punct_ratio_max`` punctuation tokens.  Both thresholds are strict.
    """
    if not usages:
        raise ValueError(f"filter_candidate({lemma!r}): usages must be non-empty")
    pos_class = classify_pos(vocab.pos)
    if pos_class is not None and pos_class not in ALLOWED_POS_CLASSES:
        return FilterVerdict(False, "pos", f"POS class {pos_class!r} (tag {vocab.pos!r})")
    flagged = 0
    for usage in usages:
        bad_language = language_check is not None and not language_check(usage)
        too_much_punct = punctuation_ratio(usage) > punct_ratio_max
        if bad_language or too_much_punct:
            flagged += 1
    fraction = flagged / len(usages)
    if fraction > flagged_fraction_max:
        return FilterVerdict(
            False, "usage_quality", f"{flagged}/{len(usages)} usages flagged ({fraction:.1%})"
        )
    return FilterVerdict(True)


USAGE_TSV_HEADER = ("lemma", "identifier", "context", "indexes_target_token", "grouping")


def write_usages_tsv(usages: Iterable[UsageSample], path: str | Path) -> None:
    """Write usages in the annotation data layout (one row per usage)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(USAGE_TSV_HEADER) + "\n")
        for u in usages:
            fh.write(
                f"{u.lemma}\t{u.usage_id}\t{u.context}\t{u.target_index}\t{u.period.grouping}\n"
            )


def read_usages_tsv(path: str | Path) -> list[UsageSample]:
    path = Path(path)
    usages = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != USAGE_TSV_HEADER:
            raise ValueError(f"{path}: unexpected usage TSV header {header}")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 columns, got {len(cols)}")
            lemma, identifier, context, index_s, grouping = cols
            usages.append(
                UsageSample(
                    usage_id=identifier,
                    lemma=lemma,
                    context=context,
                    target_index=int(index_s),
                    period=Period.from_grouping(grouping),
                )
            )
    return usages
