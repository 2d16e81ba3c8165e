"""Per-usage contextual vectors and the APD / COS change measures.

Vectors are produced by an external provider (typically a transformer;
the recommended recipe averages layers 12 and 1 over sentences with the
target token replaced by its lemma) and ingested from text files.  This
module only measures change between two usage-vector sets.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .align import cosine_distance
from .corpus import Period


@dataclass
class UsageVectorSet:
    """Contextual vectors for one lemma in one period, keyed by usage id."""

    lemma: str
    period: Period
    entries: Mapping[str, np.ndarray]
    provider_meta: str = ""
    dim: int = field(init=False)

    def __post_init__(self):
        if not self.entries:
            raise ValueError(f"usage-vector set for {self.lemma!r} is empty")
        entries = {}
        dim = None
        for usage_id, vec in self.entries.items():
            vec = np.asarray(vec, dtype=np.float64)
            if vec.ndim != 1:
                raise ValueError(f"{usage_id}: vector must be 1-D")
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise ValueError(
                    f"{usage_id}: dimension {vec.shape[0]} differs from established {dim}"
                )
            entries[usage_id] = vec
        self.entries = entries
        self.dim = dim

    def __len__(self) -> int:
        return len(self.entries)

    def matrix(self) -> np.ndarray:
        """Vectors stacked in usage_id-sorted order."""
        return np.stack([self.entries[k] for k in sorted(self.entries)])


def load_usage_vectors(path: str | Path) -> UsageVectorSet:
    """Read a usage-vector file.

    Format: first line `<count> <dim> <lemma> <period>`, then one line
    `<usage_id> <v1> ... <v_dim>` per usage.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4:
            raise ValueError(f"{path}: expected '<count> <dim> <lemma> <period>' header")
        count, dim = int(header[0]), int(header[1])
        lemma, period = header[2], Period(header[3])
        entries: dict[str, np.ndarray] = {}
        for i in range(count):
            parts = fh.readline().split()
            if not parts:
                raise ValueError(f"{path}: expected {count} rows, found {i}")
            usage_id = parts[0]
            if usage_id in entries:
                raise ValueError(f"{path}: duplicate usage_id {usage_id!r}")
            if len(parts) - 1 != dim:
                raise ValueError(
                    f"{path}: usage {usage_id!r} has dimension {len(parts) - 1}, expected {dim}"
                )
            entries[usage_id] = np.array([float(v) for v in parts[1:]])
    return UsageVectorSet(lemma=lemma, period=period, entries=entries)


def save_usage_vectors(uset: UsageVectorSet, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(uset)} {uset.dim} {uset.lemma} {uset.period.value}\n")
        for usage_id in sorted(uset.entries):
            row = uset.entries[usage_id]
            fh.write(usage_id + " " + " ".join(f"{v:.17g}" for v in row) + "\n")


def _check_compatible(set1: UsageVectorSet, set2: UsageVectorSet) -> None:
    if set1.dim != set2.dim:
        raise ValueError(f"dimension mismatch: {set1.dim} vs {set2.dim}")
    if set1.lemma != set2.lemma:
        raise ValueError(f"lemma mismatch: {set1.lemma!r} vs {set2.lemma!r}")


def apd(
    set1: UsageVectorSet,
    set2: UsageVectorSet,
    n_samples: int | None = None,
    seed: int = 0,
) -> float:
    """Average pairwise cosine distance between two usage-vector sets.

    The default averages over the full cross product.  With ``n_samples``
    the mean is taken over that many pairs drawn uniformly (with
    replacement) under ``seed``; the full product is exact and cheap at
    the usual set sizes, so sampling exists for parity with the
    subsampling variant of the measure, not for speed.

    Note apd(S, S) > 0 whenever S holds more than one distinct vector:
    the cross product includes distinct pairs.  Contrast com_distance.
    """
    _check_compatible(set1, set2)
    m1 = set1.matrix()
    m2 = set2.matrix()
    norms1 = np.linalg.norm(m1, axis=1)
    norms2 = np.linalg.norm(m2, axis=1)
    if (norms1 == 0).any() or (norms2 == 0).any():
        raise ValueError("usage vectors must be nonzero")
    cos = (m1 / norms1[:, None]) @ (m2 / norms2[:, None]).T
    dist = 1.0 - np.clip(cos, -1.0, 1.0)
    if n_samples is None:
        return float(dist.mean())
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = random.Random(seed)
    n1, n2 = dist.shape
    total = 0.0
    for _ in range(n_samples):
        total += dist[rng.randrange(n1), rng.randrange(n2)]
    return total / n_samples


def com_distance(set1: UsageVectorSet, set2: UsageVectorSet) -> float:
    """Cosine distance between the centroids of two usage-vector sets.

    Duplicating every vector of a set leaves its centroid, and hence the
    measure, unchanged; identical sets give 0.
    """
    _check_compatible(set1, set2)
    c1 = set1.matrix().mean(axis=0)
    c2 = set2.matrix().mean(axis=0)
    if np.linalg.norm(c1) == 0 or np.linalg.norm(c2) == 0:
        raise ValueError("centroid is the zero vector, COS undefined")
    return cosine_distance(c1, c2)
