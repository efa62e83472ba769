"""Location mentions resolved to US states (or a non-US region) by pattern and gazetteer.

Scan order is: bracketed tags in the title, then free text in the title,
then free text in the body.  The first stage with a hit decides; within a
stage the leftmost (then longest) match wins.  Two-letter state codes are
only trusted in uppercase and in a bracket or ``US, XX`` context.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

US_STATE = "us_state"
NON_US = "non_us"
UNRESOLVED = "unresolved"

USPS_CODES = frozenset(
    "AL AK AZ AR CA CO CT DE DC FL GA HI ID IL IN IA KS KY LA ME MD MA MI MN MS MO MT NE NV NH "
    "NJ NM NY NC ND OH OK OR PA RI SC SD TN TX UT VT VA WA WV WI WY".split()
)
_US_MARKERS = {"US", "USA", "U.S.", "U.S.A.", "UNITED STATES"}


class GazetteerError(ValueError):
    pass


def _norm(s: str) -> str:
    return " ".join(s.replace("’", "'").split()).casefold()


@dataclass(frozen=True)
class LocationTag:
    raw_span: str
    resolution: str
    value: str | None = None
    source: str = "title"

    def to_json(self) -> dict:
        return {"raw_span": self.raw_span, "resolution": self.resolution,
                "value": self.value, "source": self.source}

    @classmethod
    def from_json(cls, d: dict) -> "LocationTag":
        return cls(d["raw_span"], d["resolution"], d.get("value"), d.get("source", "title"))

    @property
    def state(self) -> str | None:
        return self.value if self.resolution == US_STATE else None


class Gazetteer:
    """Place-name lookup: state names and codes, US city aliases, non-US regions."""

    def __init__(self, states: dict[str, str], aliases: dict[str, str], non_us: dict[str, str],
                 version: int = 1):
        self.version = version
        bad = set(states) - USPS_CODES
        if bad:
            raise GazetteerError(f"invalid USPS code(s): {sorted(bad)}")
        self.states = dict(states)
        self._lookup: dict[str, tuple[str, str]] = {}
        self._display: dict[str, str] = {}
        for code, name in states.items():
            self._add(name, (US_STATE, code))
        for alias, code in aliases.items():
            if code not in self.states:
                raise GazetteerError(f"alias {alias!r} maps to unknown state {code!r}")
            self._add(alias, (US_STATE, code))
        for alias, region in non_us.items():
            self._add(alias, (NON_US, region))
        names = sorted(self._display.values(), key=lambda s: (-len(s), s))
        self._pattern = re.compile(
            r"(?<![\w])(" + "|".join(re.escape(n).replace(r"\ ", r"\s+") for n in names) + r")(?![\w])",
            re.IGNORECASE,
        )

    def _add(self, name: str, value: tuple[str, str]) -> None:
        key = _norm(name)
        if key in self._lookup:
            raise GazetteerError(f"duplicate alias {name!r}")
        self._lookup[key] = value
        self._display[key] = name

    @classmethod
    def load(cls, path: str | Path | None = None) -> "Gazetteer":
        if path is None:
            raw = resources.files("concernmine").joinpath("data/gazetteer.json").read_text("utf-8")
        else:
            raw = Path(path).read_text("utf-8")
        doc = json.loads(raw)
        return cls(doc["states"], doc.get("aliases", {}), doc.get("non_us", {}),
                   doc.get("version", 1))

    def lookup(self, name: str) -> tuple[str, str] | None:
        return self._lookup.get(_norm(name))

    def state_name(self, code: str) -> str:
        return self.states[code]

    def code_for_name(self, name: str) -> str | None:
        hit = self.lookup(name)
        return hit[1] if hit and hit[0] == US_STATE else None

    def scan(self, text: str) -> Iterable[re.Match]:
        return self._pattern.finditer(text)


_BRACKET = re.compile(r"\[([^\[\]]{1,80})\]")
_SEP = re.compile(r"\s*[,/|:–—-]\s*")
_US_CODE = re.compile(
    r"(?<![\w.])(?:U\.S\.A\.|U\.S\.|USA|US)\s*[,:/–—-]\s*([A-Z]{2})(?![\w])"
)


def _resolve_bracket(content: str, gaz: Gazetteer) -> tuple[str, str | None] | None:
    whole = gaz.lookup(content)
    if whole:
        return whole
    parts = [p for p in _SEP.split(content.strip()) if p]
    saw_us = False
    non_us = None
    for part in parts:
        if part.upper() in _US_MARKERS and part.isupper():
            saw_us = True
            continue
        if len(part) == 2 and part.isupper() and part in USPS_CODES:
            return US_STATE, part
        hit = gaz.lookup(part)
        if hit and hit[0] == US_STATE:
            return hit
        if hit and non_us is None:
            non_us = hit
    if non_us:
        return non_us
    if saw_us:
        return UNRESOLVED, None
    return None


def _scan_brackets(title: str, gaz: Gazetteer) -> LocationTag | None:
    for m in _BRACKET.finditer(title):
        res = _resolve_bracket(m.group(1), gaz)
        if res:
            return LocationTag(m.group(0), res[0], res[1], "title")
    return None


def _scan_text(text: str, gaz: Gazetteer, source: str) -> LocationTag | None:
    best: tuple[int, int, LocationTag] | None = None
    for m in _US_CODE.finditer(text):
        if m.group(1) in USPS_CODES:
            cand = (m.start(), -len(m.group(0)), LocationTag(m.group(0), US_STATE, m.group(1), source))
            best = cand if best is None or cand[:2] < best[:2] else best
            break
    for m in gaz.scan(text):
        hit = gaz.lookup(m.group(0))
        if hit is None:
            continue
        cand = (m.start(), -len(m.group(0)), LocationTag(m.group(0), hit[0], hit[1], source))
        if best is None or cand[:2] < best[:2]:
            best = cand
        break
    return best[2] if best else None


def extract_location(title: str, body: str, gazetteer: Gazetteer) -> LocationTag | None:
    return (
        _scan_brackets(title, gazetteer)
        or _scan_text(title, gazetteer, "title")
        or _scan_text(body, gazetteer, "body")
    )


@dataclass(frozen=True)
class CoverageStats:
    total: int
    us_count: int
    non_us_count: int

    @property
    def us_fraction(self) -> float:
        return self.us_count / self.total if self.total else 0.0

    @property
    def non_us_fraction(self) -> float:
        return self.non_us_count / self.total if self.total else 0.0

    def as_tuple(self) -> tuple[float, int, float, int]:
        return self.us_fraction, self.us_count, self.non_us_fraction, self.non_us_count

    def to_json(self) -> dict:
        return {"total": self.total, "us_count": self.us_count, "us_fraction": self.us_fraction,
                "non_us_count": self.non_us_count, "non_us_fraction": self.non_us_fraction}


def coverage_stats(tags: Sequence[LocationTag | None]) -> CoverageStats:
    """Counts over one tag slot per post (``None`` for no location found)."""
    us = sum(1 for t in tags if t is not None and t.resolution == US_STATE)
    non = sum(1 for t in tags if t is not None and t.resolution == NON_US)
    return CoverageStats(len(tags), us, non)
