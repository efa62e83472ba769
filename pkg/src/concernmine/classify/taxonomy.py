from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping


@dataclass(frozen=True)
class TaxonomyTopic:
    id: str
    name: str


# Order matches the classification prompt.
TAXONOMY: tuple[TaxonomyTopic, ...] = tuple(
    TaxonomyTopic(name.replace(" ", "_"), name)
    for name in (
        "utility", "pest", "mold", "interior decoration", "fee dispute", "noise complaint",
        "evicted by landlord", "rent increase", "deposit dispute", "pet", "landlord harassment",
        "personal income decrease", "sublease", "covid risk",
    )
)
TOPIC_IDS: tuple[str, ...] = tuple(t.id for t in TAXONOMY)
BY_ID: dict[str, TaxonomyTopic] = {t.id: t for t in TAXONOMY}


def topic_name(topic_id: str) -> str:
    return BY_ID[topic_id].name if topic_id in BY_ID else topic_id.replace("_", " ")


class MergeMap:
    """Total map from taxonomy ids to display topics used in reports."""

    def __init__(self, mapping: Mapping[str, str], taxonomy: Iterable[str] = TOPIC_IDS):
        taxonomy = tuple(taxonomy)
        missing = [t for t in taxonomy if t not in mapping]
        if missing:
            raise ValueError(f"merge map is not total; unmapped: {missing}")
        extra = [t for t in mapping if t not in taxonomy]
        if extra:
            raise ValueError(f"merge map has unknown taxonomy ids: {extra}")
        self.mapping = {t: mapping[t] for t in taxonomy}

    def __call__(self, topic_id: str) -> str:
        return self.mapping[topic_id]

    def __eq__(self, other) -> bool:
        return isinstance(other, MergeMap) and self.mapping == other.mapping

    def __repr__(self) -> str:
        merged = {k: v for k, v in self.mapping.items() if k != v}
        return f"MergeMap({merged or 'identity'})"

    @property
    def display_topics(self) -> list[str]:
        """Distinct display topics, sorted by id."""
        return sorted(set(self.mapping.values()))

    def is_identity(self) -> bool:
        return all(k == v for k, v in self.mapping.items())

    @classmethod
    def identity(cls) -> "MergeMap":
        return cls({t: t for t in TOPIC_IDS})

    @classmethod
    def default(cls) -> "MergeMap":
        """Pest and mold fold into ``health_hazards``; everything else maps to itself."""
        m = {t: t for t in TOPIC_IDS}
        m["pest"] = m["mold"] = "health_hazards"
        return cls(m)

    @classmethod
    def with_merges(cls, groups: Mapping[str, Iterable[str]]) -> "MergeMap":
        m = {t: t for t in TOPIC_IDS}
        for target, members in groups.items():
            for t in members:
                m[t] = target
        return cls(m)

    def to_json(self) -> dict:
        return dict(self.mapping)

    @classmethod
    def load(cls, path: str | Path) -> "MergeMap":
        return cls(json.loads(Path(path).read_text("utf-8")))
