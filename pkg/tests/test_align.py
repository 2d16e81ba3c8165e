import numpy as np
import pytest

from lscd.align import (
    AlignedPair,
    cosine_distance,
    identity_pair,
    normalize_and_center,
    orthogonal_procrustes,
)
from lscd.static_embed import VectorSpace


def _space(words, matrix):
    return VectorSpace(tuple(words), np.asarray(matrix, dtype=np.float32))


def _random_space(rng, words, dim):
    mat = rng.standard_normal((len(words), dim)).astype(np.float32)
    return normalize_and_center(_space(words, mat))


def _random_orthogonal(rng, dim):
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def test_cosine_distance_basic():
    assert cosine_distance([1, 0], [1, 0]) == pytest.approx(0.0)
    assert cosine_distance([1, 0], [0, 1]) == pytest.approx(1.0)
    assert cosine_distance([1, 0], [-1, 0]) == pytest.approx(2.0)
    assert cosine_distance([1, 0], [1, 1]) == pytest.approx(1 - 1 / np.sqrt(2))
    assert cosine_distance([1, 2], [2, 4]) == pytest.approx(0.0)


def test_cosine_distance_symmetric_and_scale_invariant():
    rng = np.random.default_rng(0)
    for _ in range(50):
        u, v = rng.standard_normal(8), rng.standard_normal(8)
        assert cosine_distance(u, v) == pytest.approx(cosine_distance(v, u))
        assert cosine_distance(3.7 * u, v) == pytest.approx(cosine_distance(u, v))
        assert 0.0 <= cosine_distance(u, v) <= 2.0


def test_cosine_distance_rejects_zero_vector():
    with pytest.raises(ValueError):
        cosine_distance([0, 0], [1, 0])


def test_normalize_and_center_single_row():
    out = normalize_and_center(_space(["w"], [[3.0, 4.0]]))
    assert out.vectors == pytest.approx(np.zeros((1, 2)), abs=1e-9)


def test_normalize_and_center_two_rows():
    out = normalize_and_center(_space(["a", "b"], [[1.0, 0.0], [0.0, 1.0]]))
    assert out.vectors == pytest.approx(np.array([[0.5, -0.5], [-0.5, 0.5]]), abs=1e-7)


def test_normalize_and_center_column_means_zero():
    rng = np.random.default_rng(5)
    words = [f"w{i}" for i in range(40)]
    out = normalize_and_center(_space(words, rng.standard_normal((40, 7))))
    assert np.abs(out.vectors.mean(axis=0)).max() < 1e-6


def test_normalize_and_center_order_is_normalize_first():
    # With normalize-first the two unit rows of (2,0) and (0,4) become
    # (1,0),(0,1) then center to +-0.5; center-first would give different
    # magnitudes, so this pins the required order.
    out = normalize_and_center(_space(["a", "b"], [[2.0, 0.0], [0.0, 4.0]]))
    assert out.vectors == pytest.approx(np.array([[0.5, -0.5], [-0.5, 0.5]]), abs=1e-7)


def test_normalize_and_center_zero_row_names_word():
    with pytest.raises(ValueError, match="bad"):
        normalize_and_center(_space(["ok", "bad"], [[1.0, 0.0], [0.0, 0.0]]))


def test_procrustes_self_alignment_is_identity():
    rng = np.random.default_rng(1)
    words = [f"w{i}" for i in range(30)]
    space = _random_space(rng, words, 6)
    pair = orthogonal_procrustes(space, space)
    assert pair.rotation_W == pytest.approx(np.eye(6), abs=1e-6)
    residual = np.linalg.norm(pair.space1.vectors - pair.space2.vectors)
    assert residual < 1e-6
    assert all(pair.distance(w) < 1e-9 for w in words)


def test_procrustes_recovers_planted_rotation():
    rng = np.random.default_rng(2)
    words = [f"w{i}" for i in range(60)]
    base = _random_space(rng, words, 8)
    q = _random_orthogonal(rng, 8)
    rotated = _space(words, base.vectors @ q.astype(np.float32))
    pair = orthogonal_procrustes(rotated, base)
    # W should undo q: rotated @ W == base
    assert pair.rotation_W == pytest.approx(q.T, abs=1e-4)
    mean_cd = np.mean([pair.distance(w) for w in words])
    assert mean_cd < 1e-6


def test_procrustes_improves_on_noisy_rotation():
    rng = np.random.default_rng(3)
    words = [f"w{i}" for i in range(80)]
    base = _random_space(rng, words, 10)
    q = _random_orthogonal(rng, 10)
    noisy = base.vectors @ q.astype(np.float32)
    noisy = noisy + rng.normal(0, 0.01, noisy.shape).astype(np.float32)
    space1 = _space(words, noisy)
    pre = np.mean([cosine_distance(space1.vector(w), base.vector(w)) for w in words])
    pair = orthogonal_procrustes(space1, base)
    post = np.mean([pair.distance(w) for w in words])
    assert post < pre


def test_procrustes_invariant_under_common_rotation():
    rng = np.random.default_rng(4)
    words = [f"w{i}" for i in range(50)]
    s1 = _random_space(rng, words, 6)
    s2 = _random_space(rng, words, 6)
    baseline = orthogonal_procrustes(s1, s2)
    common = _random_orthogonal(rng, 6).astype(np.float32)
    rotated = orthogonal_procrustes(
        _space(words, s1.vectors @ common), _space(words, s2.vectors @ common)
    )
    for w in words:
        assert rotated.distance(w) == pytest.approx(baseline.distance(w), abs=1e-6)


def test_procrustes_never_worse_than_identity():
    rng = np.random.default_rng(6)
    words = [f"w{i}" for i in range(40)]
    for trial in range(10):
        s1 = _random_space(rng, words, 5)
        s2 = _random_space(rng, words, 5)
        pair = orthogonal_procrustes(s1, s2)
        aligned_res = np.linalg.norm(pair.space1.vectors - s2.vectors)
        identity_res = np.linalg.norm(s1.vectors - s2.vectors)
        assert aligned_res <= identity_res + 1e-9


def test_procrustes_uses_shared_vocabulary_only():
    rng = np.random.default_rng(7)
    words1 = [f"w{i}" for i in range(20)] + ["only1"]
    words2 = [f"w{i}" for i in range(20)] + ["only2"]
    s1 = _random_space(rng, words1, 4)
    s2 = _random_space(rng, words2, 4)
    pair = orthogonal_procrustes(s1, s2)
    assert set(pair.shared_words) == {f"w{i}" for i in range(20)}
    # full space1 is mapped, including non-shared rows
    assert pair.space1.words == s1.words
    with pytest.raises(KeyError):
        pair.distance("only1")


def test_procrustes_empty_intersection_rejected():
    rng = np.random.default_rng(8)
    s1 = _random_space(rng, ["a", "b"], 3)
    s2 = _random_space(rng, ["c", "d"], 3)
    with pytest.raises(ValueError):
        orthogonal_procrustes(s1, s2)


def test_procrustes_dim_mismatch_rejected():
    rng = np.random.default_rng(9)
    s1 = _random_space(rng, ["a", "b"], 3)
    s2 = _random_space(rng, ["a", "b"], 4)
    with pytest.raises(ValueError):
        orthogonal_procrustes(s1, s2)


def test_aligned_pair_validates_orthogonality():
    rng = np.random.default_rng(10)
    words = ["a", "b", "c"]
    s = _random_space(rng, words, 3)
    with pytest.raises(ValueError):
        AlignedPair(s, s, tuple(words), np.full((3, 3), 0.5))


def test_identity_pair_distances():
    rng = np.random.default_rng(11)
    words = ["a", "b", "c", "d"]
    s1 = _random_space(rng, words, 5)
    s2 = _random_space(rng, words, 5)
    pair = identity_pair(s1, s2)
    assert pair.rotation_W == pytest.approx(np.eye(5))
    for w in words:
        assert pair.distance(w) == pytest.approx(
            cosine_distance(s1.vector(w), s2.vector(w))
        )
