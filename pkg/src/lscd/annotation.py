"""Annotation projects: pair scheduling, judgment logging, round advance.

A project samples usages per target and period, schedules an initial
pool of uniform random usage pairs, and serves them to annotators in a
per-annotator randomized order.  After each round, every target's WUG is
clustered and one new pair is scheduled for every pair of multi-usage
clusters not yet connected by a judgment; a target is complete when all
of its scheduled pairs are judged (or retired) and no such unconnected
cluster pair remains.

State is an append-only event log (judgments, serves, round advances)
next to an immutable project snapshot; replaying the log restores the
project exactly, including the served-pair gate used to validate
submissions.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import (
    Corpus,
    Period,
    UsageSample,
    _derive_seed,
    extract_usages,
    write_usages_tsv,
)
from .wug import (
    WUG,
    Judgment,
    SolverConfig,
    cluster_wug,
    layout_wug,
    write_clusters_tsv,
    write_judgments_tsv,
)

SCALE_LABELS = {4: "Identical", 3: "Closely Related", 2: "Distantly Related", 1: "Unrelated"}
ABSTAIN_LABEL = "Cannot decide"


class AnnotationError(Exception):
    """Base error with a machine-readable code for the HTTP layer."""

    code = "annotation_error"
    http_status = 400


class UnknownProject(AnnotationError):
    code = "unknown_project"
    http_status = 404


class UnknownAnnotator(AnnotationError):
    code = "unknown_annotator"
    http_status = 404


class UnknownTarget(AnnotationError):
    code = "unknown_target"
    http_status = 404


class InvalidRating(AnnotationError):
    code = "invalid_rating"
    http_status = 400


class PairNotServed(AnnotationError):
    code = "pair_not_served"
    http_status = 409


class DuplicateJudgment(AnnotationError):
    code = "duplicate_judgment"
    http_status = 409


class RoundIncomplete(AnnotationError):
    code = "round_incomplete"
    http_status = 409


@dataclass(frozen=True)
class TargetStatus:
    complete: bool
    unconnected_multicluster_pairs: int
    judged_pairs: int
    total_scheduled: int
    excluded_usages: int
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class CompletionStatus:
    round: int
    targets: Mapping[str, TargetStatus]

    @property
    def complete(self) -> bool:
        return all(t.complete for t in self.targets.values())


@dataclass(frozen=True)
class ScheduledPair:
    lemma: str
    usage_1: UsageSample
    usage_2: UsageSample

    @property
    def pair(self) -> tuple[str, str]:
        a, b = self.usage_1.usage_id, self.usage_2.usage_id
        return (a, b) if a <= b else (b, a)


def _pair_key(id1: str, id2: str) -> tuple[str, str]:
    return (id1, id2) if id1 <= id2 else (id2, id1)


def _serve_priority(seed: int, annotator: str, pair: tuple[str, str]) -> int:
    """Stable per-annotator ordering key; adding pairs never reorders old ones."""
    digest = hashlib.sha256(f"{seed}|{annotator}|{pair[0]}|{pair[1]}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class AnnotationProject:
    """Mutable project state bound to an optional on-disk event log."""

    def __init__(
        self,
        project_id: str,
        targets: Sequence[str],
        usages: Mapping[str, Mapping[Period, Sequence[UsageSample]]],
        annotators: Sequence[str],
        sample_size: int,
        seed: int,
        flags: Mapping[str, Sequence[str]] | None = None,
        data_dir: str | Path | None = None,
    ):
        self.project_id = project_id
        self.targets = list(targets)
        self.usages = {
            lemma: {p: list(us) for p, us in per_period.items()}
            for lemma, per_period in usages.items()
        }
        self.annotators = list(annotators)
        self.sample_size = sample_size
        self.seed = seed
        self.flags = {lemma: list(fl) for lemma, fl in (flags or {}).items()}
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.round = 0
        self.judgments: list[Judgment] = []
        # pair -> lemma, across all rounds
        self.scheduled: dict[tuple[str, str], str] = {}
        self.closed: set[tuple[str, str]] = set()
        self.served: dict[str, set[tuple[str, str]]] = {a: set() for a in self.annotators}
        self.judged_by: dict[str, set[tuple[str, str]]] = {a: set() for a in self.annotators}
        self._judged_pairs: set[tuple[str, str]] = set()
        self._by_id: dict[str, UsageSample] = {}
        for per_period in self.usages.values():
            for us in per_period.values():
                for u in us:
                    if u.usage_id in self._by_id:
                        raise ValueError(f"duplicate usage id {u.usage_id!r}")
                    self._by_id[u.usage_id] = u
        for lemma in self.targets:
            for pair in self._initial_pairs(lemma):
                self.scheduled[pair] = lemma

    # -- scheduling ---------------------------------------------------

    def _target_usages(self, lemma: str) -> list[UsageSample]:
        per_period = self.usages.get(lemma, {})
        out = [u for us in per_period.values() for u in us]
        return sorted(out, key=lambda u: u.usage_id)

    def _initial_pairs(self, lemma: str) -> list[tuple[str, str]]:
        """Round-0 pool: 2*|nodes| distinct pairs drawn uniformly."""
        ids = [u.usage_id for u in self._target_usages(lemma)]
        n = len(ids)
        if n < 2:
            return []
        all_pairs = [(ids[i], ids[j]) for i in range(n) for j in range(i + 1, n)]
        want = min(2 * n, len(all_pairs))
        rng = random.Random(_derive_seed(self.seed, "sched", lemma, "0"))
        return sorted(rng.sample(all_pairs, want))

    def next_pair(self, annotator: str) -> ScheduledPair | None:
        """First scheduled pair, in this annotator's personal order, that
        they have not judged yet; None when their queue is exhausted."""
        if annotator not in self.served:
            raise UnknownAnnotator(f"annotator {annotator!r} is not registered")
        pending = [
            pair
            for pair in self.scheduled
            if pair not in self.judged_by[annotator] and pair not in self.closed
        ]
        if not pending:
            return None
        pair = min(pending, key=lambda p: (_serve_priority(self.seed, annotator, p), p))
        if pair not in self.served[annotator]:
            self.served[annotator].add(pair)
            self._log({"type": "serve", "annotator": annotator,
                       "identifier1": pair[0], "identifier2": pair[1]})
        lemma = self.scheduled[pair]
        return ScheduledPair(lemma, self._by_id[pair[0]], self._by_id[pair[1]])

    def progress(self, annotator: str) -> tuple[int, int]:
        """(pairs judged by this annotator, total scheduled pairs)."""
        if annotator not in self.judged_by:
            raise UnknownAnnotator(f"annotator {annotator!r} is not registered")
        return len(self.judged_by[annotator]), len(self.scheduled)

    # -- judgments ----------------------------------------------------

    def submit(self, judgment: Judgment) -> None:
        """Validate and append one judgment to the log."""
        if judgment.annotator not in self.served:
            raise UnknownAnnotator(f"annotator {judgment.annotator!r} is not registered")
        pair = judgment.pair
        if pair not in self.scheduled:
            raise PairNotServed(f"pair {pair} was never scheduled")
        if pair not in self.served[judgment.annotator]:
            raise PairNotServed(f"pair {pair} was not served to {judgment.annotator!r}")
        if pair in self.judged_by[judgment.annotator]:
            raise DuplicateJudgment(
                f"{judgment.annotator!r} already judged pair {pair}"
            )
        self.judgments.append(judgment)
        self.judged_by[judgment.annotator].add(pair)
        self._judged_pairs.add(pair)
        self._log({
            "type": "judgment",
            "identifier1": judgment.usage_id_1,
            "identifier2": judgment.usage_id_2,
            "annotator": judgment.annotator,
            "judgment": judgment.rating,
            "comment": judgment.comment,
        })

    def target_judgments(self, lemma: str) -> list[Judgment]:
        ids = {u.usage_id for u in self._target_usages(lemma)}
        return [j for j in self.judgments if j.usage_id_1 in ids and j.usage_id_2 in ids]

    # -- clustering & status -------------------------------------------

    def build_wug(self, lemma: str, clustered: bool = True) -> WUG:
        """Current WUG for a target, exclusions refreshed, optionally clustered
        under this round's deterministic solver seed."""
        if lemma not in self.targets:
            raise UnknownTarget(f"{lemma!r} is not a project target")
        wug = WUG(lemma=lemma, nodes=tuple(self._target_usages(lemma)),
                  judgments=self.target_judgments(lemma))
        wug.refresh_exclusions()
        if clustered:
            clustering, _ = cluster_wug(wug, self._solver_config(lemma))
            wug.clustering = clustering
        return wug

    def _solver_config(self, lemma: str) -> SolverConfig:
        return SolverConfig(seed=_derive_seed(self.seed, "cluster", lemma, str(self.round)))

    def _unconnected_pairs(self, wug: WUG) -> list[tuple[int, int]]:
        """Multi-cluster pairs with no non-abstain judgment between them."""
        clustering = wug.clustering or {}
        sizes: dict[int, int] = {}
        for c in clustering.values():
            sizes[c] = sizes.get(c, 0) + 1
        multi = sorted(c for c, size in sizes.items() if size > 1)
        connected: set[tuple[int, int]] = set()
        for j in wug.judgments:
            if j.is_abstain:
                continue
            c1 = clustering.get(j.usage_id_1)
            c2 = clustering.get(j.usage_id_2)
            if c1 is None or c2 is None or c1 == c2:
                continue
            connected.add((min(c1, c2), max(c1, c2)))
        return [
            (a, b)
            for i, a in enumerate(multi)
            for b in multi[i + 1 :]
            if (a, b) not in connected
        ]

    def status(self) -> CompletionStatus:
        """Live per-target completion, clustered under the current round seed."""
        targets: dict[str, TargetStatus] = {}
        for lemma in self.targets:
            wug = self.build_wug(lemma)
            unconnected = self._unconnected_pairs(wug)
            pairs = [p for p, lm in self.scheduled.items() if lm == lemma]
            judged = sum(1 for p in pairs if p in self._judged_pairs)
            open_pairs = sum(
                1 for p in pairs
                if p not in self._judged_pairs and p not in self.closed
            )
            targets[lemma] = TargetStatus(
                complete=open_pairs == 0 and len(unconnected) == 0,
                unconnected_multicluster_pairs=len(unconnected),
                judged_pairs=judged,
                total_scheduled=len(pairs),
                excluded_usages=len(wug.excluded_nodes),
                flags=tuple(self.flags.get(lemma, ())),
            )
        return CompletionStatus(round=self.round, targets=targets)

    def advance_round(self, close_open: bool = False) -> CompletionStatus:
        """Close the round: cluster every target and schedule one new pair per
        unconnected multi-cluster pair.  Requires every scheduled pair to be
        judged (or close_open=True, which retires the stragglers)."""
        open_pairs = sorted(
            p for p in self.scheduled
            if p not in self._judged_pairs and p not in self.closed
        )
        if open_pairs:
            if not close_open:
                raise RoundIncomplete(
                    f"{len(open_pairs)} scheduled pairs lack a judgment; "
                    "judge them or advance with close_open"
                )
            self.closed.update(open_pairs)
            self._log({"type": "close", "pairs": [list(p) for p in open_pairs]})

        self.round += 1
        new_pairs: list[dict] = []
        for lemma in self.targets:
            wug = self.build_wug(lemma)
            unconnected = self._unconnected_pairs(wug)
            if not unconnected:
                continue
            clustering = wug.clustering or {}
            members: dict[int, list[str]] = {}
            for uid, c in sorted(clustering.items()):
                members.setdefault(c, []).append(uid)
            rng = random.Random(_derive_seed(self.seed, "sched", lemma, str(self.round)))
            for a, b in unconnected:
                candidates = sorted(
                    _pair_key(x, y)
                    for x in members[a]
                    for y in members[b]
                )
                candidates = [
                    p for p in candidates
                    if p not in self._judged_pairs and p not in self.scheduled
                ]
                if not candidates:
                    continue
                pair = rng.choice(candidates)
                self.scheduled[pair] = lemma
                new_pairs.append(
                    {"lemma": lemma, "identifier1": pair[0], "identifier2": pair[1]}
                )
        self._log({"type": "advance", "round": self.round, "scheduled": new_pairs})
        return self.status()

    # -- export ---------------------------------------------------------

    def export_wug(self, lemma: str, out_dir: str | Path) -> dict[str, Path]:
        """Write uses.tsv / judgments.tsv / layout.json, plus clusters.tsv
        once a round has been advanced (before that no clustering exists)."""
        wug = self.build_wug(lemma, clustered=self.round >= 1)
        if not wug.judgments:
            raise UnknownTarget(f"{lemma!r} has no judgments to export")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            "uses": out_dir / "uses.tsv",
            "judgments": out_dir / "judgments.tsv",
            "layout": out_dir / "layout.json",
        }
        write_usages_tsv(self._target_usages(lemma), paths["uses"])
        write_judgments_tsv(wug.judgments, paths["judgments"])
        with open(paths["layout"], "w", encoding="utf-8") as fh:
            json.dump(layout_wug(wug, seed=self.seed), fh, indent=2)
        if wug.clustering is not None:
            paths["clusters"] = out_dir / "clusters.tsv"
            write_clusters_tsv(wug.clustering, paths["clusters"])
        return paths

    # -- persistence -----------------------------------------------------

    def _log(self, event: dict) -> None:
        if self.data_dir is None:
            return
        with open(self.data_dir / "events.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def snapshot(self) -> dict:
        usages = {
            lemma: {
                period.value: [
                    {
                        "identifier": u.usage_id,
                        "context": u.context,
                        "indexes_target_token": u.target_index,
                    }
                    for u in us
                ]
                for period, us in per_period.items()
            }
            for lemma, per_period in self.usages.items()
        }
        return {
            "project_id": self.project_id,
            "targets": self.targets,
            "annotators": self.annotators,
            "sample_size": self.sample_size,
            "seed": self.seed,
            "flags": self.flags,
            "usages": usages,
        }


def create_project(
    targets: Sequence[str],
    c1: Corpus,
    c2: Corpus,
    *,
    sample_size: int = 25,
    seed: int = 0,
    annotators: Sequence[str] = ("annotator1",),
    project_id: str = "project",
    data_dir: str | Path | None = None,
) -> AnnotationProject:
    """Sample usages for each target from both corpora and open a project.

    Targets missing from a period are kept but flagged, as are targets
    with fewer than sample_size usages in a period.  With data_dir set,
    the immutable snapshot and an empty event log are written there.
    """
    if not targets:
        raise ValueError("no targets given")
    if len(set(targets)) != len(targets):
        raise ValueError("duplicate targets")
    usages: dict[str, dict[Period, list[UsageSample]]] = {}
    flags: dict[str, list[str]] = {}
    for lemma in targets:
        per_period: dict[Period, list[UsageSample]] = {}
        for corpus in (c1, c2):
            us = extract_usages(corpus, lemma, max_n=sample_size, seed=seed)
            per_period[corpus.period] = us
            if not us:
                flags.setdefault(lemma, []).append(f"missing_{corpus.period.value.lower()}")
            elif len(us) < sample_size:
                flags.setdefault(lemma, []).append(
                    f"undersampled_{corpus.period.value.lower()}:{len(us)}"
                )
        usages[lemma] = per_period
    project = AnnotationProject(
        project_id=project_id,
        targets=targets,
        usages=usages,
        annotators=annotators,
        sample_size=sample_size,
        seed=seed,
        flags=flags,
        data_dir=data_dir,
    )
    if data_dir is not None:
        data_dir = Path(data_dir)
        data_dir.mkdir(parents=True, exist_ok=True)
        snap_path = data_dir / "project.json"
        if snap_path.exists():
            raise FileExistsError(f"{snap_path} already exists, refusing to overwrite")
        with open(snap_path, "w", encoding="utf-8") as fh:
            json.dump(project.snapshot(), fh, indent=2, sort_keys=True)
        (data_dir / "events.jsonl").touch()
    return project


def load_project(data_dir: str | Path) -> AnnotationProject:
    """Rebuild a project from its snapshot and event log.

    The initial schedule is recomputed from the snapshot seed; judgments,
    serves, closes, and advance-round schedules replay from the log, so
    the restored state (including CompletionStatus) matches the state at
    the last append.
    """
    data_dir = Path(data_dir)
    snap_path = data_dir / "project.json"
    if not snap_path.exists():
        raise UnknownProject(f"no project snapshot under {data_dir}")
    snap = json.loads(snap_path.read_text(encoding="utf-8"))
    usages: dict[str, dict[Period, list[UsageSample]]] = {}
    for lemma, per_period in snap["usages"].items():
        usages[lemma] = {}
        for period_s, rows in per_period.items():
            period = Period(period_s)
            usages[lemma][period] = [
                UsageSample(
                    usage_id=row["identifier"],
                    lemma=lemma,
                    context=row["context"],
                    target_index=row["indexes_target_token"],
                    period=period,
                )
                for row in rows
            ]
    project = AnnotationProject(
        project_id=snap["project_id"],
        targets=snap["targets"],
        usages=usages,
        annotators=snap["annotators"],
        sample_size=snap["sample_size"],
        seed=snap["seed"],
        flags=snap["flags"],
        data_dir=None,  # muted during replay, re-attached below
    )
    events_path = data_dir / "events.jsonl"
    if events_path.exists():
        with open(events_path, encoding="utf-8") as fh:
            for raw in fh:
                line = raw.strip()
                if not line:
                    continue
                event = json.loads(line)
                kind = event["type"]
                if kind == "serve":
                    project.served[event["annotator"]].add(
                        _pair_key(event["identifier1"], event["identifier2"])
                    )
                elif kind == "judgment":
                    judgment = Judgment(
                        event["identifier1"],
                        event["identifier2"],
                        event["annotator"],
                        event["judgment"],
                        event.get("comment", ""),
                    )
                    pair = judgment.pair
                    project.judgments.append(judgment)
                    project.judged_by[judgment.annotator].add(pair)
                    project._judged_pairs.add(pair)
                elif kind == "close":
                    project.closed.update(tuple(p) for p in event["pairs"])
                elif kind == "advance":
                    project.round = event["round"]
                    for row in event["scheduled"]:
                        pair = _pair_key(row["identifier1"], row["identifier2"])
                        project.scheduled[pair] = row["lemma"]
                else:
                    raise ValueError(f"unknown event type {kind!r} in {events_path}")
    project.data_dir = data_dir
    return project
