"""Change discovery over a candidate population.

Pipeline: choose a population from the vocabulary intersection (full or
frequency-stratified sample), score each lemma with a change measure,
binarize the ranking at mu + t*sigma, tune t on gold data when available,
and apply the candidate quality filter to predicted positives.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .align import AlignedPair
from .corpus import (
    Corpus,
    FilterVerdict,
    UsageSample,
    VocabEntry,
    build_vocabulary,
    extract_usages,
    filter_candidate,
    intersection_only,
)
from .metrics import precision_recall_fbeta
from .token_embed import UsageVectorSet, apd, com_distance


@dataclass(frozen=True)
class Population:
    """The candidate lemmas under consideration."""

    lemmas: tuple[str, ...]
    source: str  # "full_vocabulary" | "stratified_sample"
    seed: int
    excluded: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.source not in ("full_vocabulary", "stratified_sample"):
            raise ValueError(f"unknown population source {self.source!r}")
        overlap = self.excluded & set(self.lemmas)
        if overlap:
            raise ValueError(f"excluded lemmas present in population: {sorted(overlap)[:5]}")

    def __len__(self) -> int:
        return len(self.lemmas)


@dataclass(frozen=True)
class GradedRanking:
    """Finite change scores per lemma under one measure."""

    scores: Mapping[str, float]
    measure: str  # "CD" | "APD" | "COS"

    def __post_init__(self):
        if self.measure not in ("CD", "APD", "COS"):
            raise ValueError(f"unknown measure {self.measure!r}")
        for lemma, score in self.scores.items():
            if not np.isfinite(score):
                raise ValueError(f"non-finite score for {lemma!r}: {score}")

    def ranked(self) -> list[tuple[str, float]]:
        """Lemmas by descending score, ties by lemma for determinism."""
        return sorted(self.scores.items(), key=lambda kv: (-kv[1], kv[0]))


@dataclass(frozen=True)
class BinaryPrediction:
    """Labels from thresholding a ranking at mu + t*sigma (inclusive)."""

    labels: Mapping[str, bool]
    threshold_value: float
    t_param: float
    mu: float
    sigma: float

    def __post_init__(self):
        expected = self.mu + self.t_param * self.sigma
        if abs(self.threshold_value - expected) > 1e-9 * max(1.0, abs(expected)):
            raise ValueError(
                f"threshold_value {self.threshold_value} != mu + t*sigma = {expected}"
            )


def sample_population(
    vocab: Sequence[VocabEntry],
    size: int,
    exclude: Iterable[str] = (),
    seed: int = 0,
) -> Population:
    """Frequency-stratified sample from the vocabulary intersection.

    The combined frequency range (freq_c1 + freq_c2) of eligible lemmas
    is split into 5 contiguous areas of equal width; each area receives a
    share of ``size`` proportional to its population (largest-remainder
    rounding, so shares sum exactly to size) and is sampled uniformly
    without replacement.  Excluded lemmas are never eligible.
    """
    exclude = frozenset(exclude)
    eligible = [e for e in intersection_only(vocab) if e.lemma not in exclude]
    if size > len(eligible):
        raise ValueError(f"requested {size} lemmas but only {len(eligible)} eligible")
    if size < 1:
        raise ValueError("size must be >= 1")
    freqs = [e.freq_total for e in eligible]
    lo, hi = min(freqs), max(freqs)
    areas: list[list[str]] = [[] for _ in range(5)]
    for entry, f in zip(eligible, freqs):
        # integer arithmetic keeps boundaries exact; f == hi maps to the top area
        area = 4 if hi == lo else min(4, (f - lo) * 5 // (hi - lo))
        areas[area].append(entry.lemma)

    quotas = [size * len(a) / len(eligible) for a in areas]
    alloc = [int(q) for q in quotas]
    remainders = sorted(
        range(5), key=lambda i: (-(quotas[i] - alloc[i]), i)
    )
    shortfall = size - sum(alloc)
    for i in remainders[:shortfall]:
        alloc[i] += 1

    rng = random.Random(seed)
    chosen: list[str] = []
    for area_lemmas, k in zip(areas, alloc):
        if k:
            chosen.extend(rng.sample(sorted(area_lemmas), k))
    return Population(
        lemmas=tuple(sorted(chosen)), source="stratified_sample", seed=seed,
        excluded=exclude,
    )


def full_population(vocab: Sequence[VocabEntry], exclude: Iterable[str] = ()) -> Population:
    """The entire vocabulary intersection minus exclusions."""
    exclude = frozenset(exclude)
    lemmas = tuple(
        sorted(e.lemma for e in intersection_only(vocab) if e.lemma not in exclude)
    )
    return Population(lemmas=lemmas, source="full_vocabulary", seed=0, excluded=exclude)


class TypeBackend:
    """Scores lemmas by cosine distance between aligned type vectors."""

    measure = "CD"

    def __init__(self, aligned: AlignedPair):
        self.aligned = aligned

    def score(self, lemma: str) -> float | None:
        if lemma not in self.aligned.word_set:
            return None
        return self.aligned.distance(lemma)


class TokenBackend:
    """Scores lemmas by APD or COS over per-period usage-vector sets."""

    def __init__(
        self,
        sets: Mapping[str, tuple[UsageVectorSet, UsageVectorSet]],
        measure: str = "APD",
        apd_samples: int | None = None,
        seed: int = 0,
    ):
        if measure not in ("APD", "COS"):
            raise ValueError(f"token backend measure must be APD or COS, got {measure!r}")
        self.sets = sets
        self.measure = measure
        self.apd_samples = apd_samples
        self.seed = seed

    def score(self, lemma: str) -> float | None:
        pair = self.sets.get(lemma)
        if pair is None:
            return None
        set1, set2 = pair
        if self.measure == "APD":
            return apd(set1, set2, n_samples=self.apd_samples, seed=self.seed)
        return com_distance(set1, set2)


def grade_population(pop: Population, backend) -> tuple[GradedRanking, dict[str, str]]:
    """Score every population lemma; unscorable lemmas go to the skipped map.

    A lemma is skipped (with a reason) when the backend lacks it, e.g.
    below min_count in either space or missing usage vectors.  Skips are
    reported, never silently dropped.
    """
    scores: dict[str, float] = {}
    skipped: dict[str, str] = {}
    for lemma in pop.lemmas:
        value = backend.score(lemma)
        if value is None:
            skipped[lemma] = "missing from backend (below min_count or no usage vectors)"
        else:
            scores[lemma] = float(value)
    return GradedRanking(scores=scores, measure=backend.measure), skipped


def binarize(ranking: GradedRanking, t: float) -> BinaryPrediction:
    """Label lemmas whose score reaches mu + t*sigma (inclusive).

    sigma is the population standard deviation (divide by N).  Labels are
    invariant under affine rescaling of the scores: mu and sigma absorb
    scale and shift.
    """
    if not ranking.scores:
        raise ValueError("cannot binarize an empty ranking")
    values = list(ranking.scores.values())
    # fsum keeps the inclusive boundary exact for decimal score sets where
    # naive summation would push mu a few ulps above a tied score
    mu = math.fsum(values) / len(values)
    sigma = math.sqrt(math.fsum((v - mu) ** 2 for v in values) / len(values))
    threshold = mu + t * sigma
    labels = {lemma: score >= threshold for lemma, score in ranking.scores.items()}
    return BinaryPrediction(
        labels=labels, threshold_value=threshold, t_param=t, mu=mu, sigma=sigma
    )


def threshold_grid() -> list[float]:
    """The tuning grid: -2.0 to 2.0 in steps of 0.1, exactly 41 points."""
    return [round(-2.0 + 0.1 * i, 1) for i in range(41)]


def tune_threshold(
    ranking: GradedRanking, gold: Mapping[str, bool], beta: float = 0.5
) -> tuple[float, float]:
    """Pick the grid t maximizing F-beta against gold labels.

    Ties break toward the larger t (fewer positives, favoring precision).
    Gold must cover the ranking and contain at least one positive.
    """
    missing = set(ranking.scores) - set(gold)
    if missing:
        raise ValueError(f"gold lacks labels for {len(missing)} ranked lemmas")
    if not any(gold[lemma] for lemma in ranking.scores):
        raise ValueError("gold has no positive label, F target undefined")
    best_t, best_f = None, -1.0
    for t in threshold_grid():
        pred = binarize(ranking, t)
        result = precision_recall_fbeta(pred.labels, gold, beta=beta)
        if result.f_beta >= best_f:
            best_t, best_f = t, result.f_beta
    return best_t, best_f


@dataclass(frozen=True)
class ReportRow:
    """Per-lemma provenance through the discovery stages."""

    lemma: str
    score: float | None
    label: bool
    filter_verdict: FilterVerdict | None
    skipped_reason: str | None = None


@dataclass
class DiscoveryReport:
    """Final ranked predictions with per-stage provenance."""

    rows: list[ReportRow]
    measure: str
    t_param: float
    mu: float
    sigma: float
    threshold_value: float
    tuned: bool

    @property
    def predictions(self) -> list[str]:
        """Surviving positives, by descending score."""
        return [
            r.lemma
            for r in sorted(self.rows, key=lambda r: (-(r.score or 0.0), r.lemma))
            if r.label
        ]


REPORT_HEADER = ("lemma", "score", "label", "filter_verdict", "stage_skipped_reason")


def write_report(report: DiscoveryReport, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(REPORT_HEADER) + "\n")
        ordered = sorted(
            report.rows,
            key=lambda r: (r.score is None, -(r.score if r.score is not None else 0.0), r.lemma),
        )
        for r in ordered:
            score = "NA" if r.score is None else f"{r.score:.6f}"
            verdict = "" if r.filter_verdict is None else str(r.filter_verdict)
            fh.write(
                f"{r.lemma}\t{score}\t{str(r.label).lower()}\t{verdict}\t"
                f"{r.skipped_reason or ''}\n"
            )


def discover(
    c1: Corpus,
    c2: Corpus,
    backend,
    *,
    population: Population | None = None,
    t: float | None = None,
    gold: Mapping[str, bool] | None = None,
    language_check: Callable[[UsageSample], bool] | None = None,
    filter_max_usages: int = 100,
    seed: int = 0,
) -> DiscoveryReport:
    """Run the discovery pipeline over a corpus pair.

    Exactly one of ``t`` (fixed threshold parameter) and ``gold`` (tuning
    labels) must be given.  The candidate quality filter runs only on
    predicted positives; a positive failing it is reported with its
    verdict and final label false.  Population defaults to the full
    vocabulary intersection.
    """
    if (t is None) == (gold is None):
        raise ValueError("exactly one of t and gold must be given")
    vocab = build_vocabulary(c1, c2)
    by_lemma = {e.lemma: e for e in vocab}
    if population is None:
        population = full_population(vocab)
    ranking, skipped = grade_population(population, backend)
    if gold is not None:
        t, _ = tune_threshold(ranking, gold)
    prediction = binarize(ranking, t)

    rows: list[ReportRow] = []
    for lemma in population.lemmas:
        if lemma in skipped:
            rows.append(ReportRow(lemma, None, False, None, skipped[lemma]))
            continue
        score = ranking.scores[lemma]
        if not prediction.labels[lemma]:
            rows.append(ReportRow(lemma, score, False, None))
            continue
        usages = extract_usages(c1, lemma, max_n=filter_max_usages, seed=seed)
        usages += extract_usages(c2, lemma, max_n=filter_max_usages, seed=seed)
        verdict = filter_candidate(lemma, usages, by_lemma[lemma], language_check)
        rows.append(ReportRow(lemma, score, verdict.passed, verdict))
    return DiscoveryReport(
        rows=rows,
        measure=ranking.measure,
        t_param=t,
        mu=prediction.mu,
        sigma=prediction.sigma,
        threshold_value=prediction.threshold_value,
        tuned=gold is not None,
    )


def subsample_predictions(lemmas: Sequence[str], n: int, seed: int = 0) -> list[str]:
    """Seeded uniform subsample of predictions, e.g. to cap annotation cost.

    Whether such subsampling should be uniform is an open choice; this is
    plain uniform-without-replacement under a seed.  The pool is sorted
    first so the draw depends only on membership, not input order.
    """
    pool = sorted(lemmas)
    if n >= len(pool):
        return pool
    rng = random.Random(seed)
    return sorted(rng.sample(pool, n))
