"""Alignment of two embedding spaces and the cosine change measure.

Spaces trained independently have arbitrary coordinate axes, so type
vectors are compared only after length normalization, mean centering,
and an Orthogonal Procrustes rotation fitted on the shared vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .static_embed import VectorSpace

_ORTHO_TOL = 1e-6


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v), in [0, 2]. Zero-length input is an error."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine distance undefined for the zero vector")
    cos = float(np.dot(u, v) / (nu * nv))
    # clip rounding spill so the result stays in [0, 2]
    return 1.0 - min(1.0, max(-1.0, cos))


def normalize_and_center(space: VectorSpace) -> VectorSpace:
    """Scale every row to unit norm, then subtract the column-wise mean.

    The order matters and is fixed: normalize first, center second.
    Centering shifts rows off the unit sphere; that is expected.
    """
    mat = np.asarray(space.vectors, dtype=np.float64)
    norms = np.linalg.norm(mat, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"zero vector for word {space.words[zero[0]]!r}")
    mat = mat / norms[:, None]
    mat = mat - mat.mean(axis=0)
    return VectorSpace(words=list(space.words), vectors=mat,
                       config=space.config, period=space.period)


@dataclass
class AlignedPair:
    """Two comparable spaces: space1 rotated onto space2's axes.

    ``space1`` already carries the rotation; ``rotation_W`` is kept for
    inspection and for mapping additional vectors.
    """

    space1: VectorSpace
    space2: VectorSpace
    shared_words: tuple[str, ...]
    rotation_W: np.ndarray
    word_set: frozenset[str] = field(init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.rotation_W, dtype=np.float64)
        defect = np.abs(w.T @ w - np.eye(w.shape[0])).max()
        if defect > _ORTHO_TOL:
            raise ValueError(f"rotation is not orthogonal (defect {defect:.3e})")
        for word in self.shared_words:
            if word not in self.space1 or word not in self.space2:
                raise ValueError(f"shared word {word!r} missing from a space")
        self.word_set = frozenset(self.shared_words)

    def distance(self, word: str) -> float:
        """Cosine distance between the word's aligned representations."""
        if word not in self.word_set:
            raise KeyError(f"{word!r} is not in the shared vocabulary")
        return cosine_distance(self.space1.vector(word), self.space2.vector(word))


def identity_pair(space1: VectorSpace, space2: VectorSpace) -> AlignedPair:
    """Wrap two spaces that are already in one coordinate system.

    For comparing pre-aligned vector files: no rotation is applied
    (rotation_W is the identity).
    """
    if space1.dim != space2.dim:
        raise ValueError(f"dimension mismatch: {space1.dim} vs {space2.dim}")
    shared = tuple(sorted(set(space1.words) & set(space2.words)))
    if not shared:
        raise ValueError("spaces share no vocabulary")
    return AlignedPair(space1=space1, space2=space2, shared_words=shared,
                       rotation_W=np.eye(space1.dim))


def orthogonal_procrustes(space1: VectorSpace, space2: VectorSpace) -> AlignedPair:
    """Rotate space1 onto space2 by the least-squares orthogonal map.

    Expects both spaces already normalized and centered.  The rotation
    W = U Vᵀ comes from the SVD of AᵀB, where A and B are the two
    matrices restricted to the shared vocabulary in identical row order;
    space1's full matrix is then mapped through W, space2 is returned
    unchanged.
    """
    if space1.dim != space2.dim:
        raise ValueError(f"dimension mismatch: {space1.dim} vs {space2.dim}")
    shared = tuple(sorted(set(space1.words) & set(space2.words)))
    if not shared:
        raise ValueError("spaces share no vocabulary, nothing to align on")
    idx1 = [space1.word_index[w] for w in shared]
    idx2 = [space2.word_index[w] for w in shared]
    a = np.asarray(space1.vectors, dtype=np.float64)[idx1]
    b = np.asarray(space2.vectors, dtype=np.float64)[idx2]
    u, _, vt = np.linalg.svd(a.T @ b)
    w = u @ vt
    mapped = VectorSpace(
        words=list(space1.words),
        vectors=np.asarray(space1.vectors, dtype=np.float64) @ w,
        config=space1.config,
        period=space1.period,
    )
    return AlignedPair(space1=mapped, space2=space2, shared_words=shared, rotation_W=w)
