"""Recall@k against labeled samples and Fleiss' kappa across repeated runs."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .classify.taxonomy import MergeMap

K_VALUES = (1, 2, 3)


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class ValidationLabel:
    post_id: str
    topic: str


def load_labels(path: str | Path) -> dict[str, str]:
    """Labels from JSONL (``{"post_id", "topic"}`` per line) or CSV with those headers."""
    path = Path(path)
    text = path.read_text("utf-8")
    rows: list[tuple[str, str]] = []
    if path.suffix.lower() == ".csv":
        for row in csv.DictReader(text.splitlines()):
            rows.append((row["post_id"], row["topic"]))
    else:
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                rows.append((str(d["post_id"]), str(d["topic"])))
            except (ValueError, KeyError, TypeError) as e:
                raise MetricsError(f"{path}:{n}: bad label line ({e})") from None
    labels: dict[str, str] = {}
    for pid, topic in rows:
        if pid in labels:
            raise MetricsError(f"duplicate label for post {pid!r}")
        labels[pid] = topic
    return labels


def write_labels(path: str | Path, labels: Mapping[str, str]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for pid in sorted(labels):
            fh.write(json.dumps({"post_id": pid, "topic": labels[pid]}, sort_keys=True) + "\n")


def _check(predictions: Mapping[str, Sequence[str]], labels: Mapping[str, str], k: int) -> None:
    if k not in K_VALUES:
        raise MetricsError(f"k must be one of {K_VALUES}, got {k}")
    missing = sorted(pid for pid in labels if pid not in predictions)
    if missing:
        shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
        raise MetricsError(f"{len(missing)} labeled post(s) have no prediction: {shown}")


@dataclass(frozen=True)
class TopicRecall:
    n: int
    hits: tuple[int, int, int]

    def recall(self, k: int) -> float | None:
        return self.hits[k - 1] / self.n if self.n else None


@dataclass(frozen=True)
class RecallAtK:
    k: int
    correct: int
    n: int
    per_topic: dict[str, float]

    @property
    def value(self) -> float:
        return self.correct / self.n if self.n else 0.0

    def __float__(self) -> float:
        return self.value


def recall_at_k(predictions: Mapping[str, Sequence[str]], labels: Mapping[str, str], k: int) -> RecallAtK:
    """Fraction of labeled posts whose label is in the top ``k`` predictions, with a per-label breakdown."""
    _check(predictions, labels, k)
    correct = 0
    per_n: dict[str, int] = {}
    per_hit: dict[str, int] = {}
    for pid, label in labels.items():
        hit = label in list(predictions[pid])[:k]
        correct += hit
        per_n[label] = per_n.get(label, 0) + 1
        per_hit[label] = per_hit.get(label, 0) + hit
    per_topic = {t: per_hit[t] / per_n[t] for t in sorted(per_n)}
    return RecallAtK(k, correct, len(labels), per_topic)


def merged_recall(predictions: Mapping[str, Sequence[str]], labels: Mapping[str, str], merge_map: MergeMap,
                  k: int) -> RecallAtK:
    """recall_at_k after mapping both predictions and labels through ``merge_map``.

    Labels already at display level (not in the taxonomy) pass through unchanged.
    """
    _check(predictions, labels, k)
    m = merge_map.mapping
    mp = {pid: [m.get(t, t) for t in predictions[pid]] for pid in labels}
    ml = {pid: m.get(t, t) for pid, t in labels.items()}
    return recall_at_k(mp, ml, k)


@dataclass(frozen=True)
class RecallReport:
    recall: tuple[float, float, float]
    counts: tuple[int, int, int]
    n: int
    per_topic: dict[str, TopicRecall] = field(default_factory=dict)
    level: str = "taxonomy"

    def topic_recall(self, topic: str, k: int) -> float | None:
        tr = self.per_topic.get(topic)
        return tr.recall(k) if tr else None

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "n": self.n,
            "recall": {f"@{k}": self.recall[k - 1] for k in K_VALUES},
            "correct": {f"@{k}": self.counts[k - 1] for k in K_VALUES},
            "per_topic": {t: {"n": tr.n, **{f"@{k}": tr.recall(k) for k in K_VALUES}}
                          for t, tr in sorted(self.per_topic.items())},
        }

    def per_topic_rows(self, topics: Sequence[str] | None = None) -> list[list]:
        """Rows of (topic, n, r@1, r@2, r@3); topics with no labeled items show ``n/a``."""
        names = list(topics) if topics is not None else sorted(self.per_topic)
        rows = []
        for t in names:
            tr = self.per_topic.get(t)
            if tr is None or tr.n == 0:
                rows.append([t, 0, "n/a", "n/a", "n/a"])
            else:
                rows.append([t, tr.n] + [f"{tr.recall(k):.6f}" for k in K_VALUES])
        return rows


def recall_report(predictions: Mapping[str, Sequence[str]], labels: Mapping[str, str],
                  merge_map: MergeMap | None = None) -> RecallReport:
    if merge_map is not None:
        m = merge_map.mapping
        predictions = {pid: [m.get(t, t) for t in predictions[pid]] for pid in labels if pid in predictions}
        labels = {pid: m.get(t, t) for pid, t in labels.items()}
    results = [recall_at_k(predictions, labels, k) for k in K_VALUES]
    per_n: dict[str, int] = {}
    per_hits: dict[str, list[int]] = {}
    for pid, label in labels.items():
        ranked = list(predictions[pid])
        per_n[label] = per_n.get(label, 0) + 1
        hits = per_hits.setdefault(label, [0, 0, 0])
        for k in K_VALUES:
            hits[k - 1] += label in ranked[:k]
    per_topic = {t: TopicRecall(per_n[t], tuple(per_hits[t])) for t in sorted(per_n)}
    return RecallReport(tuple(r.value for r in results), tuple(r.correct for r in results), len(labels),
                        per_topic, "taxonomy" if merge_map is None or merge_map.is_identity() else "display")


# Agreement

@dataclass(frozen=True)
class AgreementMatrix:
    counts: np.ndarray
    categories: tuple[str, ...]
    item_ids: tuple[str, ...] = ()

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2:
            raise MetricsError("agreement matrix must be 2-D")
        if c.shape[1] != len(self.categories):
            raise MetricsError("column count does not match categories")
        if c.size and (c < 0).any():
            raise MetricsError("counts must be non-negative")
        if c.shape[0]:
            sums = c.sum(axis=1)
            if (sums != sums[0]).any():
                raise MetricsError("every row must sum to the same number of raters")

    @property
    def raters_per_item(self) -> int:
        return int(self.counts.sum(axis=1)[0]) if self.counts.shape[0] else 0

    @property
    def n_items(self) -> int:
        return int(self.counts.shape[0])


def build_agreement_matrix(runs: Sequence[Mapping[str, Sequence[str]]], categories: Sequence[str],
                           merge_map: MergeMap | None = None) -> AgreementMatrix:
    """One row per post, one rating per run: the run's rank-1 topic (after ``merge_map``)."""
    if len(runs) < 2:
        raise MetricsError(f"need at least 2 runs, got {len(runs)}")
    ids = sorted(runs[0])
    for i, run in enumerate(runs[1:], 1):
        if set(run) != set(ids):
            diff = sorted(set(run) ^ set(ids))
            raise MetricsError(f"run {i} covers different post ids than run 0: {diff[:10]}")
    cats = list(categories)
    index = {c: j for j, c in enumerate(cats)}
    counts = np.zeros((len(ids), len(cats)), dtype=np.int64)
    for run in runs:
        for r, pid in enumerate(ids):
            top = run[pid][0]
            if merge_map is not None:
                top = merge_map.mapping.get(top, top)
            if top not in index:
                raise MetricsError(f"post {pid!r}: category {top!r} not in the active category set")
            counts[r, index[top]] += 1
    return AgreementMatrix(counts, tuple(cats), tuple(ids))


def fleiss_kappa(matrix: AgreementMatrix | np.ndarray) -> float:
    counts = np.asarray(matrix.counts if isinstance(matrix, AgreementMatrix) else matrix, dtype=np.int64)
    if counts.ndim != 2 or counts.shape[0] == 0:
        raise MetricsError("fleiss_kappa needs a non-empty items x categories matrix")
    n_raters = counts.sum(axis=1)
    n = int(n_raters[0])
    if (n_raters != n).any():
        raise MetricsError("every row must sum to the same number of raters")
    if n < 2:
        raise MetricsError("fleiss_kappa needs at least 2 raters per item")
    N = counts.shape[0]
    # Integer sums keep the perfect-agreement case exact.
    P_i = ((counts ** 2).sum(axis=1) - n) / (n * (n - 1))
    P_bar = float(P_i.mean())
    p_j = counts.sum(axis=0) / (N * n)
    P_e = float((p_j ** 2).sum())
    if P_e == 1.0:
        if P_bar == 1.0:
            return 1.0
        raise MetricsError("kappa undefined: expected agreement is 1")  # pragma: no cover
    return (P_bar - P_e) / (1.0 - P_e)
