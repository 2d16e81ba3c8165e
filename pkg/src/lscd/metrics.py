"""Evaluation metrics: rank correlation, classification scores, agreement.

Contains Spearman's rho (with the weighted mean-pairwise variant used for
inter-annotator agreement), precision/recall/F-beta, and Krippendorff's
alpha for ordinal rating data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class EvalResult:
    """Scores of a binary classification against gold labels.

    ``rho`` is optional: it carries a rank correlation when the caller
    evaluated a graded ranking alongside the binary labels.
    """

    precision: float
    recall: float
    f_beta: float
    beta: float
    n: int
    rho: float | None = None


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 3:
        raise ValueError("need at least 3 paired observations")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ValueError("constant input has no rank correlation")
    rho = stats.spearmanr(x, y).statistic
    return float(rho)


def pairwise_spearman_mean(
    ratings: Mapping[str, Mapping[str, float]], min_overlap: int = 3
) -> tuple[float, list[tuple[str, str, float, int]]]:
    """Weighted mean pairwise Spearman over annotators.

    ``ratings`` maps annotator -> {item: rating}.  For every annotator
    pair the correlation is computed on their jointly rated items; pairs
    with fewer than ``min_overlap`` shared items, or with constant ratings
    on the overlap, are excluded.  The mean weights each pair by its
    overlap size.  Returns the weighted mean and the per-pair breakdown
    as (annotator_a, annotator_b, rho, overlap) tuples.
    """
    annotators = sorted(ratings)
    pairs: list[tuple[str, str, float, int]] = []
    for i, a in enumerate(annotators):
        for b in annotators[i + 1 :]:
            shared = sorted(set(ratings[a]) & set(ratings[b]))
            if len(shared) < min_overlap:
                continue
            xs = [ratings[a][item] for item in shared]
            ys = [ratings[b][item] for item in shared]
            if len(set(xs)) < 2 or len(set(ys)) < 2:
                continue
            rho = spearman_rho(xs, ys)
            pairs.append((a, b, rho, len(shared)))
    if not pairs:
        raise ValueError("no annotator pair has enough overlapping ratings")
    total_w = sum(w for *_, w in pairs)
    mean = sum(rho * w for _, _, rho, w in pairs) / total_w
    return mean, pairs


def precision_recall_fbeta(
    predicted: Mapping[str, bool], gold: Mapping[str, bool], beta: float = 0.5,
    rho: float | None = None,
) -> EvalResult:
    """Precision, recall and F-beta of boolean predictions against gold.

    Both arguments map item -> bool; scores are computed over the common
    key set, which must be non-empty and contain at least one gold
    positive.  A prediction with zero positives yields P = 0 rather than
    an error.  F-beta weights precision over recall for beta < 1; when
    precision and recall are both zero, F is defined as 0.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    keys = set(predicted) & set(gold)
    if not keys:
        raise ValueError("predictions and gold share no items")
    if not any(gold[k] for k in keys):
        raise ValueError("gold has no positive label on the common items")
    tp = sum(1 for k in keys if predicted[k] and gold[k])
    fp = sum(1 for k in keys if predicted[k] and not gold[k])
    fn = sum(1 for k in keys if not predicted[k] and gold[k])
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn)
    return EvalResult(precision, recall, fbeta_score(precision, recall, beta),
                      beta, len(keys), rho)


def fbeta_score(precision: float, recall: float, beta: float = 0.5) -> float:
    """F-beta from precision and recall; 0 when both are 0."""
    b2 = beta * beta
    denom = b2 * precision + recall
    if denom == 0:
        return 0.0
    return (1 + b2) * precision * recall / denom


def _ordinal_delta_sq(margins: np.ndarray, c: int, k: int) -> float:
    """Squared ordinal distance between rating categories c <= k.

    Categories are index positions into the sorted category list; the
    distance counts units rated between them: (sum of margins from c to k,
    minus half the two endpoint margins) squared.
    """
    inner = margins[c : k + 1].sum() - (margins[c] + margins[k]) / 2.0
    return float(inner * inner)


def krippendorff_alpha(
    ratings: Mapping[str, Mapping[str, float]] | Sequence[Sequence[float | None]],
) -> float:
    """Krippendorff's alpha with the ordinal difference function.

    Accepts either a mapping annotator -> {item: rating} or a rectangular
    table (rows = annotators, columns = items, None for missing).  Items
    rated by fewer than two annotators are ignored; at least two pairable
    items are required.  Perfect observed agreement returns 1.0 even when
    expected disagreement is zero.
    """
    if isinstance(ratings, Mapping):
        items: dict[str, list[float]] = {}
        for per_item in ratings.values():
            for item, value in per_item.items():
                items.setdefault(item, []).append(float(value))
        units = [vals for vals in items.values() if len(vals) >= 2]
    else:
        n_items = max((len(row) for row in ratings), default=0)
        units = []
        for j in range(n_items):
            vals = [float(row[j]) for row in ratings if j < len(row) and row[j] is not None]
            if len(vals) >= 2:
                units.append(vals)
    if len(units) < 2:
        raise ValueError("need at least 2 items rated by 2+ annotators")

    categories = sorted({v for vals in units for v in vals})
    cat_index = {c: i for i, c in enumerate(categories)}
    n_cat = len(categories)

    # Coincidence matrix: each unit contributes its ordered value pairs,
    # weighted by 1/(m_u - 1) so every unit contributes m_u units total.
    coincidence = np.zeros((n_cat, n_cat))
    for vals in units:
        m = len(vals)
        w = 1.0 / (m - 1)
        for i in range(m):
            for j in range(m):
                if i != j:
                    coincidence[cat_index[vals[i]], cat_index[vals[j]]] += w

    margins = coincidence.sum(axis=1)
    n_total = margins.sum()

    d_observed = 0.0
    d_expected = 0.0
    for c in range(n_cat):
        for k in range(c + 1, n_cat):
            delta = _ordinal_delta_sq(margins, c, k)
            d_observed += coincidence[c, k] * delta
            d_expected += margins[c] * margins[k] * delta
    d_observed /= n_total
    d_expected /= n_total * (n_total - 1)

    if d_expected == 0.0:
        # all ratings in one category: agreement is perfect iff observed
        # disagreement is zero, which it must be here
        return 1.0
    return 1.0 - d_observed / d_expected
