import random

import numpy as np
import pytest

from lscd.corpus import Period, VocabEntry
from lscd.discovery import (
    BinaryPrediction,
    GradedRanking,
    Population,
    TokenBackend,
    TypeBackend,
    binarize,
    discover,
    full_population,
    grade_population,
    sample_population,
    subsample_predictions,
    threshold_grid,
    tune_threshold,
    write_report,
)
from lscd.token_embed import UsageVectorSet


def _vocab(freqs):
    return [VocabEntry(w, f, f, None) for w, f in freqs.items()]


def test_population_invariants():
    with pytest.raises(ValueError):
        Population(("a",), "full_vocabulary", 0, frozenset({"a"}))
    with pytest.raises(ValueError):
        Population(("a",), "bogus_source", 0, frozenset())


def test_sample_population_paper_allocation():
    # 1000 eligible lemmas, 500 in the lowest of 5 equal-width areas;
    # size 500 -> 250 drawn from that area.
    freqs = {}
    for i in range(500):
        freqs[f"low{i}"] = 10 + (i % 5)  # all land in the lowest area
    for i in range(500):
        freqs[f"rest{i}"] = 30 + (i % 80)
    vocab = _vocab(freqs)
    lo = min(freqs.values())
    hi = max(freqs.values())
    width = (hi - lo) / 5
    pop = sample_population(vocab, 500, exclude=frozenset(), seed=4)
    assert len(pop.lemmas) == 500
    n_lowest = sum(1 for w in pop.lemmas if freqs[w] * 2 < 2 * (lo + width))
    low_area_total = sum(1 for f in freqs.values() if f - lo < width)
    expected = round(500 * low_area_total / 1000)
    assert n_lowest == expected == 250


def test_sample_population_is_seeded_and_excludes():
    freqs = {f"w{i}": 1 + i for i in range(100)}
    vocab = _vocab(freqs)
    excluded = frozenset({"w3", "w50", "w97"})
    a = sample_population(vocab, 40, exclude=excluded, seed=9)
    b = sample_population(vocab, 40, exclude=excluded, seed=9)
    c = sample_population(vocab, 40, exclude=excluded, seed=10)
    assert a.lemmas == b.lemmas
    assert a.lemmas != c.lemmas
    assert not set(a.lemmas) & excluded
    assert a.source == "stratified_sample"


def test_sample_population_degenerate_single_frequency():
    vocab = _vocab({f"w{i}": 7 for i in range(20)})
    pop = sample_population(vocab, 10, exclude=frozenset(), seed=0)
    assert len(pop.lemmas) == 10


def test_sample_population_size_bounds():
    vocab = _vocab({"a": 1, "b": 2})
    with pytest.raises(ValueError):
        sample_population(vocab, 3, exclude=frozenset(), seed=0)
    with pytest.raises(ValueError):
        sample_population(vocab, 0, exclude=frozenset(), seed=0)


def test_sample_population_allocations_always_sum(tmp_path):
    rng = random.Random(1)
    for trial in range(20):
        n = rng.randrange(10, 200)
        vocab = _vocab({f"w{i}": rng.randrange(1, 1000) for i in range(n)})
        size = rng.randrange(1, n + 1)
        pop = sample_population(vocab, size, exclude=frozenset(), seed=trial)
        assert len(pop.lemmas) == size
        assert len(set(pop.lemmas)) == size


def test_full_population_excludes():
    vocab = _vocab({"a": 1, "b": 2, "c": 3})
    pop = full_population(vocab, exclude=frozenset({"b"}))
    assert set(pop.lemmas) == {"a", "c"}
    assert pop.source == "full_vocabulary"


def test_binarize_worked_example():
    ranking = GradedRanking({"a": 0.1, "b": 0.2, "c": 0.3}, "CD")
    pred = binarize(ranking, 0.0)
    assert pred.labels == {"a": False, "b": True, "c": True}
    assert pred.mu == pytest.approx(0.2)
    assert pred.threshold_value == pytest.approx(0.2)
    assert pred.t_param == 0.0
    # population sigma: sqrt(mean of squared deviations), not N-1
    assert pred.sigma == pytest.approx(np.std([0.1, 0.2, 0.3]))


def test_binarize_large_t_all_false():
    ranking = GradedRanking({"a": 0.1, "b": 0.2, "c": 0.3}, "CD")
    pred = binarize(ranking, 10.0)
    assert not any(pred.labels.values())


def test_binarize_monotone_in_t():
    rng = random.Random(2)
    scores = {f"w{i}": rng.random() for i in range(60)}
    ranking = GradedRanking(scores, "APD")
    grid = threshold_grid()
    prev = None
    for t in grid:
        positives = {w for w, v in binarize(ranking, t).labels.items() if v}
        if prev is not None:
            assert positives <= prev
        prev = positives


def test_binarize_affine_invariance():
    rng = random.Random(3)
    scores = {f"w{i}": rng.random() for i in range(40)}
    base = binarize(GradedRanking(scores, "CD"), 0.7).labels
    shifted = {w: 3.5 * v + 11.0 for w, v in scores.items()}
    assert binarize(GradedRanking(shifted, "CD"), 0.7).labels == base


def test_threshold_grid_is_41_points():
    grid = threshold_grid()
    assert len(grid) == 41
    assert grid[0] == -2.0 and grid[-1] == 2.0
    assert grid[20] == 0.0
    steps = {round(b - a, 10) for a, b in zip(grid, grid[1:])}
    assert steps == {0.1}


def test_tune_threshold_recovers_realizable_optimum():
    rng = random.Random(5)
    scores = {f"w{i}": rng.random() for i in range(80)}
    ranking = GradedRanking(scores, "CD")
    gold = binarize(ranking, 0.5).labels
    t_best, f_best = tune_threshold(ranking, gold)
    assert f_best == pytest.approx(1.0)
    assert t_best <= 0.5 + 1e-9
    # ties toward larger t: the best grid point is the largest t
    # that still yields the same positive set
    t_next = round(t_best + 0.1, 1)
    if t_next <= 2.0:
        labels_next = binarize(ranking, t_next).labels
        assert labels_next != gold


def test_tune_threshold_requires_gold_positive_and_coverage():
    ranking = GradedRanking({"a": 0.1, "b": 0.9}, "CD")
    with pytest.raises(ValueError):
        tune_threshold(ranking, {"a": False, "b": False})
    with pytest.raises(ValueError):
        tune_threshold(ranking, {"a": True})


def test_grade_population_type_backend(tiny_pair):
    import lscd.align as align
    from lscd.static_embed import SgnsConfig, train_sgns

    c1, c2 = tiny_pair
    cfg = SgnsConfig(dim=24, window=4, negative=3, subsample=None, epochs=10,
                     min_count=3, lr=0.025, seed=2)
    s1 = align.normalize_and_center(train_sgns(c1, cfg))
    s2 = align.normalize_and_center(train_sgns(c2, cfg))
    pair = align.orthogonal_procrustes(s1, s2)
    backend = TypeBackend(pair)
    pop = Population(("alpha", "beta", "zzz_missing"), "full_vocabulary", 0, frozenset())
    ranking, skipped = grade_population(pop, backend)
    assert set(ranking.scores) == {"alpha", "beta"}
    assert "zzz_missing" in skipped
    # beta swaps topics across periods, alpha does not
    assert ranking.scores["beta"] > ranking.scores["alpha"]
    assert ranking.measure == "CD"


def test_grade_population_token_backend():
    rng = np.random.default_rng(4)
    stable = rng.standard_normal(6)

    def usage_set(lemma, period, center, n=8):
        entries = {
            f"{lemma}-{period.value}-{i}": center + 0.01 * rng.standard_normal(6)
            for i in range(n)
        }
        return UsageVectorSet(lemma, period, entries)

    sets = {
        "same": (usage_set("same", Period.C1, stable),
                 usage_set("same", Period.C2, stable)),
        "moved": (usage_set("moved", Period.C1, stable),
                  usage_set("moved", Period.C2, rng.standard_normal(6))),
    }
    backend = TokenBackend(sets, measure="COS")
    pop = Population(("same", "moved"), "full_vocabulary", 0, frozenset())
    ranking, skipped = grade_population(pop, backend)
    assert not skipped
    assert ranking.measure == "COS"
    assert ranking.scores["moved"] > ranking.scores["same"]

    apd_backend = TokenBackend(sets, measure="APD")
    apd_ranking, _ = grade_population(pop, apd_backend)
    assert apd_ranking.measure == "APD"
    assert apd_ranking.scores["moved"] > apd_ranking.scores["same"]


def test_ranking_sorts_desc_then_lexicographic():
    ranking = GradedRanking({"b": 0.5, "a": 0.5, "c": 0.9}, "CD")
    assert ranking.ranked() == [("c", 0.9), ("a", 0.5), ("b", 0.5)]


def test_report_round_trip(tmp_path):
    from lscd.discovery import REPORT_HEADER, ReportRow, DiscoveryReport

    rows = [
        ReportRow("hot", 0.9, True, "pass", None),
        ReportRow("cold", 0.1, False, None, None),
        ReportRow("gone", None, None, None, "below_min_count"),
    ]
    report = DiscoveryReport(rows, "CD", 1.0, 0.4, 0.2, 0.6, tuned=False)
    path = tmp_path / "report.tsv"
    write_report(report, path)
    lines = path.read_text().splitlines()
    assert lines[0].split("\t") == list(REPORT_HEADER)
    assert lines[1].startswith("hot\t")
    assert lines[-1].split("\t")[1] == "NA"
    assert report.predictions == ["hot"]


def test_discover_end_to_end(tiny_pair):
    import lscd.align as align
    from lscd.static_embed import SgnsConfig, train_sgns

    c1, c2 = tiny_pair
    cfg = SgnsConfig(dim=24, window=4, negative=3, subsample=None, epochs=10,
                     min_count=3, lr=0.025, seed=2)
    s1 = align.normalize_and_center(train_sgns(c1, cfg))
    s2 = align.normalize_and_center(train_sgns(c2, cfg))
    backend = TypeBackend(align.orthogonal_procrustes(s1, s2))
    report = discover(c1, c2, backend, t=1.0, seed=0)
    by_lemma = {r.lemma: r for r in report.rows}
    assert "beta" in by_lemma and "alpha" in by_lemma
    # every positive has a filter verdict
    for row in report.rows:
        if row.label:
            assert row.filter_verdict is not None
    assert report.t_param == 1.0
    assert not report.tuned


def test_discover_rejects_ambiguous_threshold_arguments(tiny_pair):
    c1, c2 = tiny_pair
    with pytest.raises(ValueError):
        discover(c1, c2, backend=None, t=None, gold=None)
    with pytest.raises(ValueError):
        discover(c1, c2, backend=None, t=1.0, gold={"alpha": True})


def test_subsample_predictions_deterministic():
    positives = [f"w{i}" for i in range(50) if i % 2 == 0]
    a = subsample_predictions(positives, 10, seed=1)
    b = subsample_predictions(positives, 10, seed=1)
    assert a == b
    assert len(a) == 10 and set(a) <= set(positives)
    # input order must not matter, only membership
    assert subsample_predictions(list(reversed(positives)), 10, seed=1) == a
    assert subsample_predictions(positives, 100, seed=1) == sorted(positives)


def test_binary_prediction_invariant_checked():
    with pytest.raises(ValueError):
        BinaryPrediction({"a": True}, threshold_value=0.5, t_param=0.0, mu=0.4,
                         sigma=0.2)
