"""Parsing ``topic: weight; topic: weight`` responses into ranked results."""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field, replace

from .taxonomy import BY_ID, TAXONOMY, topic_name

log = logging.getLogger(__name__)

MAX_TOPICS = 3
FUZZY_MAX_DISTANCE = 2

# Spellings the edit-distance threshold would miss.
ALIASES = {
    "utilities": "utility",
    "eviction": "evicted_by_landlord",
    "evictions": "evicted_by_landlord",
    "evicted": "evicted_by_landlord",
    "harassment": "landlord_harassment",
    "covid": "covid_risk",
    "covid 19": "covid_risk",
    "covid-19": "covid_risk",
    "coronavirus": "covid_risk",
    "pests": "pest",
    "pets": "pet",
    "subleasing": "sublease",
    "sublet": "sublease",
    "noise": "noise_complaint",
}

_ENTRY = re.compile(
    r"(?P<name>[^\W\d_][\w \t\-/'&]*?)\s*[:=]\s*"
    r"(?P<w>[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)\s*(?P<pct>%)?"
)
_CHUNK_SPLIT = re.compile(r"[;\n]")
_NAME_JUNK = re.compile(r"^[\s\"'`*#>\-•\d.)(]+|[\s\"'`*]+$")


class ParseError(ValueError):
    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class ClassificationResult:
    """Up to three (taxonomy id, weight) pairs, heaviest first, weights summing to 1."""

    post_id: str
    topics: tuple[tuple[str, float], ...]
    raw_response: str = field(default="", compare=False)
    model: str = field(default="", compare=False)
    temperature: float | None = field(default=None, compare=False)
    attempts: int = field(default=1, compare=False)
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not 1 <= len(self.topics) <= MAX_TOPICS:
            raise ValueError(f"expected 1-{MAX_TOPICS} topics, got {len(self.topics)}")
        ws = [w for _, w in self.topics]
        if any(w <= 0 for w in ws):
            raise ValueError("weights must be positive")
        if any(b > a for a, b in zip(ws, ws[1:])):
            raise ValueError("weights must be non-increasing")
        if abs(sum(ws) - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {sum(ws)!r}, not 1")
        unknown = [t for t, _ in self.topics if t not in BY_ID]
        if unknown:
            raise ValueError(f"unknown topic id(s): {unknown}")

    @property
    def ranked(self) -> list[str]:
        return [t for t, _ in self.topics]

    @property
    def main(self) -> str:
        return self.topics[0][0]

    def to_json(self) -> dict:
        return {
            "post_id": self.post_id,
            "topics": [[t, w] for t, w in self.topics],
            "raw_response": self.raw_response,
            "model": self.model,
            "temperature": self.temperature,
            "attempts": self.attempts,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_json(cls, d: dict) -> "ClassificationResult":
        return cls(d["post_id"], tuple((t, float(w)) for t, w in d["topics"]),
                   d.get("raw_response", ""), d.get("model", ""), d.get("temperature"),
                   d.get("attempts", 1), tuple(d.get("warnings", ())))


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalize_name(name: str) -> str:
    s = _NAME_JUNK.sub("", name).casefold()
    s = s.replace("_", " ")
    s = " ".join(s.split())
    for suffix in (" issues", " issue"):
        if s.endswith(suffix):
            s = s[: -len(suffix)]
    return s.strip()


def match_topic(name: str) -> str | None:
    """Map a response topic name to a taxonomy id, or None beyond the fuzzy threshold.

    Exact and alias matches first; otherwise the nearest taxonomy name by edit
    distance, ties resolved by taxonomy order.
    """
    s = normalize_name(name)
    if not s:
        return None
    for t in TAXONOMY:
        if s == t.name:
            return t.id
    if s in ALIASES:
        return ALIASES[s]
    best = min(TAXONOMY, key=lambda t: levenshtein(s, t.name))
    return best.id if levenshtein(s, best.name) <= FUZZY_MAX_DISTANCE else None


def _renormalize(pairs: list[tuple[str, float]]) -> tuple[tuple[str, float], ...]:
    total = math.fsum(w for _, w in pairs)
    if abs(total - 1.0) <= 1e-12:
        return tuple(pairs)
    return tuple((t, w / total) for t, w in pairs)


def parse_classification(raw: str, post_id: str = "") -> ClassificationResult:
    """Parse a backend response.

    Entries are separated by semicolons (newlines are tolerated too); braces
    and surrounding prose are ignored.  Unknown topics and non-positive
    weights are dropped, duplicate topics keep their heaviest weight, and
    more than three entries are cut to the top three.  Ties keep response
    order.  Raises :class:`ParseError` when nothing usable remains.
    """
    warnings: list[str] = []
    entries: list[tuple[str, float]] = []
    for chunk in _CHUNK_SPLIT.split(raw.replace("{", " ").replace("}", " ")):
        for m in _ENTRY.finditer(chunk):
            name = m.group("name")
            try:
                w = float(m.group("w"))
            except ValueError:  # pragma: no cover - regex only admits floats
                continue
            if m.group("pct"):
                w /= 100.0
            topic = match_topic(name)
            if topic is None:
                warnings.append(f"unknown topic {name.strip()!r} dropped")
                continue
            if not (w > 0 and math.isfinite(w)):
                warnings.append(f"non-positive weight for {topic!r} dropped")
                continue
            entries.append((topic, w))
    if not entries:
        raise ParseError("no parseable 'topic: weight' entries", raw)

    ordered = sorted(entries, key=lambda e: -e[1])  # stable: ties keep response order
    seen: set[str] = set()
    unique = []
    for t, w in ordered:
        if t in seen:
            warnings.append(f"duplicate topic {t!r}; kept heaviest weight")
            continue
        seen.add(t)
        unique.append((t, w))
    if len(unique) > MAX_TOPICS:
        warnings.append(f"{len(unique)} topics returned; kept top {MAX_TOPICS}")
        unique = unique[:MAX_TOPICS]
    for msg in warnings:
        log.warning("post %s: %s", post_id or "?", msg)
    return ClassificationResult(post_id, _renormalize(unique), raw_response=raw,
                                warnings=tuple(warnings))


def format_classification(result: ClassificationResult) -> str:
    """Canonical ``name: weight; ...`` rendering; parses back to an equal result."""
    return "; ".join(f"{topic_name(t)}: {w!r}" for t, w in result.topics)


def with_metadata(result: ClassificationResult, **kw) -> ClassificationResult:
    return replace(result, **kw)
