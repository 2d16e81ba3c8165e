"""Word Usage Graphs: median-judgment edges, correlation clustering,
normalized loss, period splits, and change labeling with the k/n rule.

Nodes are word usages; an edge weight is the median human relatedness
judgment of a usage pair on the 4-point ordinal scale.  Clusters of the
graph are read as word senses.  The clustering objective penalizes
within-cluster edges below the scale midpoint 2.5 and cross-cluster
edges at or above it:

    L(C) = sum_{within, w<2.5} (2.5 - w) + sum_{cross, w>=2.5} (w - 2.5)

Minimizing L(C) is equivalent to maximizing the within-cluster sum of
shifted weights s = w - 2.5, which is what both solvers do: exhaustive
set-partition enumeration on small graphs, seeded simulated annealing
with restarts and a greedy polish above the exact cutoff.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import networkx as nx
import numpy as np
from numba import njit
from scipy.spatial.distance import jensenshannon

from .corpus import Period, UsageSample
from .static_embed import _LCG_A, _LCG_C, _lcg, _u01

ABSTAIN = 0
MIDPOINT = 2.5


@dataclass(frozen=True)
class Judgment:
    """One annotator's relatedness rating of a usage pair.

    rating: 1 (Unrelated) .. 4 (Identical), or 0 for abstain ("cannot
    decide"); abstains never contribute to edge weights.
    """

    usage_id_1: str
    usage_id_2: str
    annotator: str
    rating: int
    comment: str = ""

    def __post_init__(self):
        if self.usage_id_1 == self.usage_id_2:
            raise ValueError(f"self-pair judgment on {self.usage_id_1!r}")
        if self.rating not in (0, 1, 2, 3, 4):
            raise ValueError(f"rating must be 0 (abstain) or 1..4, got {self.rating}")

    @property
    def pair(self) -> tuple[str, str]:
        a, b = self.usage_id_1, self.usage_id_2
        return (a, b) if a <= b else (b, a)

    @property
    def is_abstain(self) -> bool:
        return self.rating == ABSTAIN


def aggregate_edges(judgments: Iterable[Judgment]) -> dict[tuple[str, str], float]:
    """Median rating per unordered usage pair, abstains excluded.

    Even rating counts take the mean of the two central values, so
    half-integer weights occur.  Pairs judged only by abstains get no
    edge.
    """
    ratings: dict[tuple[str, str], list[int]] = {}
    for j in judgments:
        if not j.is_abstain:
            ratings.setdefault(j.pair, []).append(j.rating)
    return {pair: float(statistics.median(vals)) for pair, vals in ratings.items()}


def excluded_by_abstains(judgments: Iterable[Judgment], min_distinct: int = 2) -> set[str]:
    """Usages judged incomprehensible: abstained on by >= min_distinct annotators.

    An abstain on a pair counts toward both of its usages (the protocol
    does not say which side was incomprehensible).
    """
    seen: dict[str, set[str]] = {}
    for j in judgments:
        if j.is_abstain:
            seen.setdefault(j.usage_id_1, set()).add(j.annotator)
            seen.setdefault(j.usage_id_2, set()).add(j.annotator)
    return {uid for uid, annotators in seen.items() if len(annotators) >= min_distinct}


@dataclass
class WUG:
    """A usage graph for one lemma."""

    lemma: str
    nodes: tuple[UsageSample, ...]
    judgments: list[Judgment] = field(default_factory=list)
    clustering: dict[str, int] | None = None
    excluded_nodes: set[str] = field(default_factory=set)

    def __post_init__(self):
        self.nodes = tuple(self.nodes)
        self._by_id = {u.usage_id: u for u in self.nodes}
        if len(self._by_id) != len(self.nodes):
            raise ValueError("duplicate usage ids among nodes")
        for j in self.judgments:
            self._check_judgment(j)

    def _check_judgment(self, j: Judgment) -> None:
        for uid in (j.usage_id_1, j.usage_id_2):
            if uid not in self._by_id:
                raise ValueError(f"judgment references unknown usage {uid!r}")

    def add_judgment(self, judgment: Judgment) -> None:
        self._check_judgment(judgment)
        self.judgments.append(judgment)

    def node(self, usage_id: str) -> UsageSample:
        return self._by_id[usage_id]

    @property
    def active_nodes(self) -> list[UsageSample]:
        """Nodes remaining after comprehensibility exclusion, id-sorted."""
        return sorted(
            (u for u in self.nodes if u.usage_id not in self.excluded_nodes),
            key=lambda u: u.usage_id,
        )

    @property
    def edges(self) -> dict[tuple[str, str], float]:
        """Median-judgment edges among non-excluded nodes."""
        return {
            pair: w
            for pair, w in aggregate_edges(self.judgments).items()
            if pair[0] not in self.excluded_nodes and pair[1] not in self.excluded_nodes
        }

    def refresh_exclusions(self, min_distinct: int = 2) -> set[str]:
        """Recompute excluded nodes from abstains; drops their cluster ids."""
        self.excluded_nodes = excluded_by_abstains(self.judgments, min_distinct)
        if self.clustering is not None:
            self.clustering = {
                uid: c for uid, c in self.clustering.items() if uid not in self.excluded_nodes
            }
        return self.excluded_nodes


@dataclass(frozen=True)
class SolverConfig:
    """Clustering solver parameters.

    Graphs whose edge-incident node count is at most exact_max_nodes are
    solved exactly by set-partition enumeration; larger graphs use
    simulated annealing (geometric cooling tuned to accept ~80% of
    uphill moves initially, steps_per_restart defaulting to 100*n^2)
    followed by a greedy polish, best of `restarts` seeded restarts.
    """

    exact_max_nodes: int = 10
    restarts: int = 20
    steps_per_restart: int | None = None
    polish_sweep_cap: int = 200
    seed: int = 0


def _partition_loss(
    edges: Mapping[tuple[str, str], float], clustering: Mapping[str, int]
) -> float:
    loss = 0.0
    for (a, b), w in edges.items():
        s = w - MIDPOINT
        same = clustering[a] == clustering[b]
        if same and s < 0:
            loss -= s
        elif not same and s >= 0:
            loss += s
    return loss


def _exhaustive_best(n: int, smat: np.ndarray) -> tuple[np.ndarray, float]:
    """Maximize the within-cluster shifted-weight sum over all partitions.

    Enumerates restricted-growth strings; the first partition attaining
    the maximum wins, which makes the result deterministic.
    """
    labels = np.zeros(n, dtype=np.int64)
    best_labels = labels.copy()
    best_within = -np.inf

    def rec(i: int, used: int, within: float) -> None:
        nonlocal best_within, best_labels
        if i == n:
            if within > best_within:
                best_within = within
                best_labels = labels[:n].copy()
            return
        for c in range(used + 1):
            delta = 0.0
            for j in range(i):
                if labels[j] == c:
                    delta += smat[i, j]
            labels[i] = c
            rec(i + 1, used + (1 if c == used else 0), within + delta)

    rec(0, 0, 0.0)
    return best_labels, best_within


@njit(cache=True)
def _anneal_best(
    n, edge_i, edge_j, edge_s, adj_start, adj_node, adj_s,
    restarts, steps, polish_cap, seed,
):
    best_labels = np.zeros(n, dtype=np.int32)
    best_within = -1.0e300
    state = (np.uint64(seed) * _LCG_A + _LCG_C) | np.uint64(1)
    labels = np.empty(n, dtype=np.int32)
    counts = np.zeros(n, dtype=np.int32)
    label_sums = np.zeros(n, dtype=np.float64)
    n_edges = edge_s.shape[0]
    for _r in range(restarts):
        for v in range(n):
            counts[v] = 0
        for v in range(n):
            state = _lcg(state)
            lab = np.int32(_u01(state) * n)
            if lab >= n:
                lab = np.int32(n - 1)
            labels[v] = lab
            counts[lab] += 1
        within = 0.0
        for e in range(n_edges):
            if labels[edge_i[e]] == labels[edge_j[e]]:
                within += edge_s[e]

        # size the initial temperature from sampled move deltas so the
        # mean uphill magnitude is accepted with probability ~0.8
        neg_sum = 0.0
        neg_cnt = 0
        probe = state
        for _p in range(200):
            probe = _lcg(probe)
            v = np.int64(_u01(probe) * n)
            if v >= n:
                v = n - 1
            probe = _lcg(probe)
            c_new = np.int32(_u01(probe) * n)
            if c_new >= n:
                c_new = np.int32(n - 1)
            c_old = labels[v]
            if c_new == c_old:
                continue
            delta = 0.0
            for e in range(adj_start[v], adj_start[v + 1]):
                lu = labels[adj_node[e]]
                if lu == c_new:
                    delta += adj_s[e]
                elif lu == c_old:
                    delta -= adj_s[e]
            if delta < 0.0:
                neg_sum -= delta
                neg_cnt += 1
        if neg_cnt > 0:
            t0 = (neg_sum / neg_cnt) / 0.2231435513
        else:
            t0 = 1.0
        t_end = t0 * 1.0e-3
        if steps > 1:
            cool = (t_end / t0) ** (1.0 / (steps - 1))
        else:
            cool = 1.0

        temp = t0
        for _step in range(steps):
            state = _lcg(state)
            v = np.int64(_u01(state) * n)
            if v >= n:
                v = n - 1
            state = _lcg(state)
            c_new = np.int32(_u01(state) * n)
            if c_new >= n:
                c_new = np.int32(n - 1)
            c_old = labels[v]
            temp *= cool
            if c_new == c_old:
                continue
            delta = 0.0
            for e in range(adj_start[v], adj_start[v + 1]):
                lu = labels[adj_node[e]]
                if lu == c_new:
                    delta += adj_s[e]
                elif lu == c_old:
                    delta -= adj_s[e]
            accept = delta >= 0.0
            if not accept:
                state = _lcg(state)
                accept = _u01(state) < np.exp(delta / temp)
            if accept:
                labels[v] = c_new
                counts[c_old] -= 1
                counts[c_new] += 1
                within += delta

        # greedy polish: move nodes to their best adjacent cluster (or a
        # fresh singleton) until a full sweep makes no strict improvement
        for _sweep in range(polish_cap):
            improved = False
            for v in range(n):
                c_old = labels[v]
                label_sums[c_old] = 0.0
                for e in range(adj_start[v], adj_start[v + 1]):
                    label_sums[labels[adj_node[e]]] = 0.0
                for e in range(adj_start[v], adj_start[v + 1]):
                    label_sums[labels[adj_node[e]]] += adj_s[e]
                cur = label_sums[c_old]
                best_c = c_old
                best_sum = cur
                for e in range(adj_start[v], adj_start[v + 1]):
                    c = labels[adj_node[e]]
                    if label_sums[c] > best_sum + 1e-12:
                        best_sum = label_sums[c]
                        best_c = c
                if 0.0 > best_sum + 1e-12 and counts[c_old] > 1:
                    fresh = -1
                    for c in range(n):
                        if counts[c] == 0:
                            fresh = c
                            break
                    if fresh >= 0:
                        best_sum = 0.0
                        best_c = np.int32(fresh)
                if best_c != c_old:
                    labels[v] = best_c
                    counts[c_old] -= 1
                    counts[best_c] += 1
                    within += best_sum - cur
                    improved = True
            if not improved:
                break

        if within > best_within:
            best_within = within
            for v in range(n):
                best_labels[v] = labels[v]
    return best_labels, best_within


def cluster_wug(
    wug: WUG, config: SolverConfig | None = None
) -> tuple[dict[str, int], float]:
    """Minimize the correlation-clustering loss over the active graph.

    Returns (clustering, loss): cluster ids are dense integers starting
    at 0, numbered by first appearance over id-sorted nodes; nodes with
    no incident edge always form their own singleton clusters.  The
    solver is exact (exhaustive) when the edge-incident subgraph has at
    most config.exact_max_nodes nodes, seeded simulated annealing
    otherwise; either way the result is deterministic for a fixed seed.
    """
    config = config or SolverConfig()
    edges = wug.edges
    active_ids = [u.usage_id for u in wug.active_nodes]
    incident = sorted({uid for pair in edges for uid in pair})
    index = {uid: i for i, uid in enumerate(incident)}
    n = len(incident)

    total_pos = sum(max(w - MIDPOINT, 0.0) for w in edges.values())
    if n == 0:
        labels = np.zeros(0, dtype=np.int64)
        within = 0.0
    elif n <= config.exact_max_nodes:
        smat = np.zeros((n, n))
        for (a, b), w in edges.items():
            i, j = index[a], index[b]
            smat[i, j] += w - MIDPOINT
            smat[j, i] += w - MIDPOINT
        labels, within = _exhaustive_best(n, smat)
    else:
        edge_i = np.fromiter((index[a] for a, _ in edges), dtype=np.int32, count=len(edges))
        edge_j = np.fromiter((index[b] for _, b in edges), dtype=np.int32, count=len(edges))
        edge_s = np.fromiter((w - MIDPOINT for w in edges.values()), dtype=np.float64,
                             count=len(edges))
        deg = np.zeros(n + 1, dtype=np.int64)
        for i, j in zip(edge_i, edge_j):
            deg[i + 1] += 1
            deg[j + 1] += 1
        adj_start = np.cumsum(deg)
        adj_node = np.zeros(adj_start[-1], dtype=np.int32)
        adj_s = np.zeros(adj_start[-1], dtype=np.float64)
        cursor = adj_start[:-1].copy()
        for e in range(len(edges)):
            i, j, s = edge_i[e], edge_j[e], edge_s[e]
            adj_node[cursor[i]] = j
            adj_s[cursor[i]] = s
            cursor[i] += 1
            adj_node[cursor[j]] = i
            adj_s[cursor[j]] = s
            cursor[j] += 1
        steps = config.steps_per_restart or 100 * n * n
        labels, within = _anneal_best(
            n, edge_i, edge_j, edge_s, adj_start, adj_node, adj_s,
            config.restarts, steps, config.polish_sweep_cap,
            np.uint64(config.seed & 0xFFFFFFFFFFFFFFFF),
        )

    clustering: dict[str, int] = {}
    relabel: dict[int, int] = {}
    for uid in incident:
        raw = int(labels[index[uid]])
        if raw not in relabel:
            relabel[raw] = len(relabel)
        clustering[uid] = relabel[raw]
    next_id = len(relabel)
    for uid in active_ids:
        if uid not in clustering:
            clustering[uid] = next_id
            next_id += 1
    return clustering, total_pos - within


def normalized_loss(wug: WUG, clustering: Mapping[str, int]) -> float:
    """Clustering loss over the bound of the maximally wrong assignment.

    The bound is the sum of |w - 2.5| over all edges, reached when every
    edge is on the wrong side; an edgeless (or all-neutral) graph has
    normalized loss 0 by definition.  Values lie in [0, 1].
    """
    edges = wug.edges
    for pair in edges:
        for uid in pair:
            if uid not in clustering:
                raise ValueError(f"clustering lacks node {uid!r}")
    denom = sum(abs(w - MIDPOINT) for w in edges.values())
    if denom == 0:
        return 0.0
    return _partition_loss(edges, clustering) / denom


def kn_thresholds(u1: int, u2: int) -> tuple[tuple[float, float], tuple[float, float]]:
    """Per-period (k, n) guards for gain/loss labeling.

    k_i = clamp(0.01*|U_i|, 1, 3) and n_i = clamp(0.1*|U_i|, 3, 5), with
    no rounding: comparisons downstream use the real values.  Counts are
    of usages remaining after comprehensibility exclusion.
    """
    out = []
    for u in (u1, u2):
        if u <= 0:
            raise ValueError("usage count must be positive")
        k = min(3.0, max(1.0, 0.01 * u))
        n = min(5.0, max(3.0, 0.1 * u))
        out.append((k, n))
    return out[0], out[1]


@dataclass(frozen=True)
class ChangeResult:
    """Binary and graded change of one lemma from its clustered WUG.

    k and n are the per-period threshold pairs ((k1, k2), (n1, n2));
    graded is the Jensen-Shannon distance (log base 2, square root, so
    in [0, 1]) between the periods' cluster-frequency distributions.
    """

    k: tuple[float, float]
    n: tuple[float, float]
    binary: bool
    graded: float
    cluster_freqs_c1: dict[int, int]
    cluster_freqs_c2: dict[int, int]
    loss_normalized: float
    gained: frozenset[int] = frozenset()
    lost: frozenset[int] = frozenset()


def change_labels(wug: WUG, clustering: Mapping[str, int]) -> ChangeResult:
    """Apply the k/n gain-loss rule and grade change by cluster-distribution JSD.

    A cluster is GAINED when it is attested at most k_1 times in C1 and
    at least n_2 times in C2; LOST mirrors this (>= n_1 in C1, <= k_2 in
    C2).  binary is true iff any cluster gained or lost.
    """
    active = wug.active_nodes
    per_period: dict[Period, list[str]] = {Period.C1: [], Period.C2: []}
    for u in active:
        per_period[u.period].append(u.usage_id)
    u1, u2 = len(per_period[Period.C1]), len(per_period[Period.C2])
    if u1 == 0 or u2 == 0:
        raise ValueError(f"{wug.lemma!r}: a period has no usable usages (C1={u1}, C2={u2})")
    for uid in (uid for uids in per_period.values() for uid in uids):
        if uid not in clustering:
            raise ValueError(f"clustering lacks node {uid!r}")
    (k1, n1), (k2, n2) = kn_thresholds(u1, u2)

    clusters = sorted({clustering[uid] for uids in per_period.values() for uid in uids})
    freqs_c1 = {c: 0 for c in clusters}
    freqs_c2 = {c: 0 for c in clusters}
    for uid in per_period[Period.C1]:
        freqs_c1[clustering[uid]] += 1
    for uid in per_period[Period.C2]:
        freqs_c2[clustering[uid]] += 1

    gained = frozenset(c for c in clusters if freqs_c1[c] <= k1 and freqs_c2[c] >= n2)
    lost = frozenset(c for c in clusters if freqs_c1[c] >= n1 and freqs_c2[c] <= k2)

    p = np.array([freqs_c1[c] for c in clusters], dtype=np.float64)
    q = np.array([freqs_c2[c] for c in clusters], dtype=np.float64)
    graded = float(jensenshannon(p, q, base=2.0))
    if np.isnan(graded):
        graded = 0.0
    graded = min(1.0, max(0.0, graded))

    return ChangeResult(
        k=(k1, k2),
        n=(n1, n2),
        binary=bool(gained or lost),
        graded=graded,
        cluster_freqs_c1=freqs_c1,
        cluster_freqs_c2=freqs_c2,
        loss_normalized=normalized_loss(wug, clustering),
        gained=gained,
        lost=lost,
    )


def split_by_period(wug: WUG) -> tuple[WUG, WUG]:
    """Node-induced per-period subgraphs, cluster assignments preserved.

    Cross-period judgments appear in neither subgraph.
    """
    def build(period: Period) -> WUG:
        nodes = tuple(u for u in wug.nodes if u.period == period)
        ids = {u.usage_id for u in nodes}
        judgments = [
            j for j in wug.judgments if j.usage_id_1 in ids and j.usage_id_2 in ids
        ]
        clustering = None
        if wug.clustering is not None:
            clustering = {uid: c for uid, c in wug.clustering.items() if uid in ids}
        return WUG(
            lemma=wug.lemma,
            nodes=nodes,
            judgments=judgments,
            clustering=clustering,
            excluded_nodes=wug.excluded_nodes & ids,
        )

    return build(Period.C1), build(Period.C2)


JUDGMENTS_TSV_HEADER = ("identifier1", "identifier2", "annotator", "judgment", "comment")
CLUSTERS_TSV_HEADER = ("identifier", "cluster")


def write_judgments_tsv(judgments: Iterable[Judgment], path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(JUDGMENTS_TSV_HEADER) + "\n")
        for j in judgments:
            fh.write(
                f"{j.usage_id_1}\t{j.usage_id_2}\t{j.annotator}\t{j.rating}\t{j.comment}\n"
            )


def read_judgments_tsv(path: str | Path) -> list[Judgment]:
    path = Path(path)
    judgments = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != JUDGMENTS_TSV_HEADER:
            raise ValueError(f"{path}: unexpected judgments header {header}")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 columns, got {len(cols)}")
            judgments.append(
                Judgment(cols[0], cols[1], cols[2], int(cols[3]), cols[4])
            )
    return judgments


def write_clusters_tsv(clustering: Mapping[str, int], path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(CLUSTERS_TSV_HEADER) + "\n")
        for uid in sorted(clustering):
            fh.write(f"{uid}\t{clustering[uid]}\n")


def read_clusters_tsv(path: str | Path) -> dict[str, int]:
    path = Path(path)
    clustering = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != CLUSTERS_TSV_HEADER:
            raise ValueError(f"{path}: unexpected clusters header {header}")
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            uid, cluster = line.split("\t")
            clustering[uid] = int(cluster)
    return clustering


def layout_wug(wug: WUG, seed: int = 0) -> dict:
    """Node-link structure with force-directed 2-D coordinates.

    Excluded nodes are omitted.  Higher edge weights pull nodes closer
    (the layout treats weight as spring strength), matching the visual
    convention of dark short edges for strongly related pairs.
    """
    graph = nx.Graph()
    active = wug.active_nodes
    for u in active:
        graph.add_node(u.usage_id)
    edges = wug.edges
    for (a, b), w in edges.items():
        graph.add_edge(a, b, weight=w)
    # RandomState rejects seeds >= 2**32, so fold wide seeds down.
    pos = nx.spring_layout(graph, seed=seed % 2**32) if graph.number_of_nodes() else {}
    clustering = wug.clustering or {}
    nodes = [
        {
            "id": u.usage_id,
            "text": u.context,
            "target_index": u.target_index,
            "period": u.period.value,
            "cluster": clustering.get(u.usage_id),
            "x": float(pos[u.usage_id][0]),
            "y": float(pos[u.usage_id][1]),
        }
        for u in active
    ]
    links = [
        {"source": a, "target": b, "weight": w} for (a, b), w in sorted(edges.items())
    ]
    return {"lemma": wug.lemma, "nodes": nodes, "edges": links}
