"""State-level topic tables and calendar time series over classified posts."""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Mapping, Sequence

from ..classify.parse import ClassificationResult
from ..classify.taxonomy import MergeMap
from ..corpus import DEFAULT_WINDOW, CorpusStats, Post
from ..locate import US_STATE, LocationTag

PERIODS = ("year", "quarter", "month")
UNCLASSIFIED = "unclassified"


def period_key(ts: int, period: str = "year") -> str:
    d = datetime.fromtimestamp(ts, tz=timezone.utc)
    if period == "year":
        return f"{d.year:04d}"
    if period == "quarter":
        return f"{d.year:04d}Q{(d.month - 1) // 3 + 1}"
    if period == "month":
        return f"{d.year:04d}-{d.month:02d}"
    raise ValueError(f"period must be one of {PERIODS}, got {period!r}")


def _ordinal(key: str, period: str) -> int:
    year = int(key[:4])
    if period == "year":
        return year
    if period == "quarter":
        return year * 4 + int(key[5]) - 1
    return year * 12 + int(key[5:7]) - 1


def _key_of(ordinal: int, period: str) -> str:
    if period == "year":
        return f"{ordinal:04d}"
    if period == "quarter":
        return f"{ordinal // 4:04d}Q{ordinal % 4 + 1}"
    return f"{ordinal // 12:04d}-{ordinal % 12 + 1:02d}"


def period_bounds(key: str, period: str) -> tuple[int, int]:
    """UTC [start, end) seconds of a period key."""
    o = _ordinal(key, period)

    def start(o: int) -> int:
        if period == "year":
            y, m = o, 1
        elif period == "quarter":
            y, m = o // 4, (o % 4) * 3 + 1
        else:
            y, m = o // 12, o % 12 + 1
        return int(datetime(y, m, 1, tzinfo=timezone.utc).timestamp())

    return start(o), start(o + 1)


def period_span(first: str, last: str, period: str) -> list[str]:
    return [_key_of(o, period) for o in range(_ordinal(first, period), _ordinal(last, period) + 1)]


def is_partial(key: str, period: str, window: tuple[int, int] | None) -> bool:
    """True when the collection window covers only part of the period."""
    if window is None:
        return False
    lo, hi = period_bounds(key, period)
    return lo < window[0] or hi - 1 > window[1]


@dataclass(frozen=True)
class TimeSeries:
    period: str
    points: tuple[tuple[str, int], ...]
    partial: tuple[str, ...] = ()
    topic: str | None = None

    def __post_init__(self):
        keys = [k for k, _ in self.points]
        ords = [_ordinal(k, self.period) for k in keys]
        if any(b <= a for a, b in zip(ords, ords[1:])):
            raise ValueError("periods must be strictly increasing")
        if any(c < 0 for _, c in self.points):
            raise ValueError("counts must be non-negative")

    @property
    def periods(self) -> list[str]:
        return [k for k, _ in self.points]

    @property
    def counts(self) -> list[int]:
        return [c for _, c in self.points]

    def as_dict(self) -> dict[str, int]:
        return dict(self.points)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def to_json(self) -> dict:
        return {"period": self.period, "topic": self.topic, "partial": list(self.partial),
                "points": [[k, c] for k, c in self.points]}

    @classmethod
    def from_json(cls, d: dict) -> "TimeSeries":
        return cls(d["period"], tuple((k, int(c)) for k, c in d["points"]), tuple(d.get("partial", ())),
                   d.get("topic"))


def _series(keys_counts: Mapping[str, int], span: Sequence[str], period: str,
            window: tuple[int, int] | None, topic: str | None = None) -> TimeSeries:
    points = tuple((k, int(keys_counts.get(k, 0))) for k in span)
    partial = tuple(k for k in span if is_partial(k, period, window))
    return TimeSeries(period, points, partial, topic)


def _span(posts: Sequence[Post], period: str) -> list[str]:
    if not posts:
        return []
    first = min(p.created_utc for p in posts)
    last = max(p.created_utc for p in posts)
    return period_span(period_key(first, period), period_key(last, period), period)


def temporal_counts(posts: Sequence[Post], period: str = "year",
                    window: tuple[int, int] | None = DEFAULT_WINDOW) -> TimeSeries:
    """Posts per UTC calendar period, zero-filled across the observed span.

    Periods the collection window only partly covers are listed in ``partial``.
    """
    counts: dict[str, int] = {}
    for p in posts:
        k = period_key(p.created_utc, period)
        counts[k] = counts.get(k, 0) + 1
    if not posts:
        period_key(0, period)  # validates the period name
    return _series(counts, _span(posts, period), period, window)


def temporal_topic_counts(posts: Sequence[Post], results: Mapping[str, ClassificationResult],
                          merge_map: MergeMap, period: str = "year",
                          window: tuple[int, int] | None = DEFAULT_WINDOW) -> dict[str, TimeSeries]:
    """One series per display topic, over the same span as :func:`temporal_counts`.

    Posts without a classification are counted under ``unclassified`` so the
    per-topic series still sum to the overall series.
    """
    span = _span(posts, period)
    per: dict[str, dict[str, int]] = {t: {} for t in merge_map.display_topics}
    for p in posts:
        r = results.get(p.id)
        topic = merge_map(r.main) if r is not None else UNCLASSIFIED
        k = period_key(p.created_utc, period)
        bucket = per.setdefault(topic, {})
        bucket[k] = bucket.get(k, 0) + 1
    return {t: _series(per[t], span, period, window, t) for t in sorted(per)}


@dataclass(frozen=True)
class StateTopicTable:
    counts: dict[str, dict[str, int]]
    topics: tuple[str, ...] = ()

    @property
    def states(self) -> list[str]:
        return sorted(self.counts)

    def total(self, state: str) -> int:
        return sum(self.counts.get(state, {}).values())

    @property
    def totals(self) -> dict[str, int]:
        return {s: self.total(s) for s in self.states}

    def fraction(self, state: str, topic: str) -> float:
        tot = self.total(state)
        return self.counts[state].get(topic, 0) / tot if tot else 0.0

    def fractions(self, state: str) -> dict[str, float]:
        return {t: self.fraction(state, t) for t in sorted(self.counts.get(state, {}))}

    def is_empty(self) -> bool:
        return not self.counts

    def to_json(self) -> dict:
        return {"topics": list(self.topics),
                "states": {s: {t: self.counts[s][t] for t in sorted(self.counts[s])} for s in self.states}}

    @classmethod
    def from_json(cls, d: dict) -> "StateTopicTable":
        return cls({s: dict(row) for s, row in d["states"].items()}, tuple(d.get("topics", ())))


def state_topic_distribution(results: Mapping[str, ClassificationResult],
                             tags: Mapping[str, LocationTag | None], merge_map: MergeMap,
                             states: Sequence[str] | None = None) -> StateTopicTable:
    """Main-topic counts per US state.  An empty or missing state filter keeps all states."""
    keep = set(states) if states else None
    counts: dict[str, dict[str, int]] = {}
    for pid in sorted(results):
        tag = tags.get(pid)
        if tag is None or tag.resolution != US_STATE:
            continue
        if keep is not None and tag.value not in keep:
            continue
        topic = merge_map(results[pid].main)
        row = counts.setdefault(tag.value, {})
        row[topic] = row.get(topic, 0) + 1
    return StateTopicTable({s: counts[s] for s in sorted(counts)}, tuple(merge_map.display_topics))


@dataclass(frozen=True)
class TrendBundle:
    states: StateTopicTable
    posts: TimeSeries
    topics: dict[str, TimeSeries]
    stats: CorpusStats | None = None
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "format": "concernmine.trends",
            "version": 1,
            "provenance": self.provenance,
            "corpus_stats": self.stats.to_json() if self.stats else None,
            "state_topics": self.states.to_json(),
            "post_frequency": self.posts.to_json(),
            "topic_frequency": {t: s.to_json() for t, s in sorted(self.topics.items())},
        }

    @classmethod
    def from_json(cls, d: dict) -> "TrendBundle":
        if d.get("format") != "concernmine.trends":
            raise ValueError("not a trends document")
        stats = CorpusStats(**d["corpus_stats"]) if d.get("corpus_stats") else None
        return cls(StateTopicTable.from_json(d["state_topics"]), TimeSeries.from_json(d["post_frequency"]),
                   {t: TimeSeries.from_json(s) for t, s in d["topic_frequency"].items()},
                   stats, d.get("provenance", {}))


def build_bundle(posts: Sequence[Post], results: Mapping[str, ClassificationResult],
                 tags: Mapping[str, LocationTag | None], merge_map: MergeMap,
                 states: Sequence[str] | None = None, period: str = "year",
                 stats: CorpusStats | None = None, provenance: dict | None = None,
                 window: tuple[int, int] | None = DEFAULT_WINDOW) -> TrendBundle:
    """Geographic table (US-resolved posts only) plus temporal series over every post."""
    ordered = sorted(posts, key=lambda p: p.id)
    return TrendBundle(
        state_topic_distribution(results, tags, merge_map, states),
        temporal_counts(ordered, period, window),
        temporal_topic_counts(ordered, results, merge_map, period, window),
        stats,
        dict(provenance or {}),
    )
