"""Loading, filtering, and summarizing the raw post corpus.

Posts arrive as JSON Lines, one submission per line.  Pushshift-style dumps
name the body field ``selftext``; that spelling is accepted as an alias.
"""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

REQUIRED_FIELDS = ("id", "created_utc", "title", "body")
TOMBSTONES = ("[removed]", "[deleted]")

DEFAULT_WINDOW = (
    int(datetime(2015, 8, 6, tzinfo=timezone.utc).timestamp()),
    # inclusive through the end of the final day
    int(datetime(2023, 5, 1, tzinfo=timezone.utc).timestamp()) - 1,
)

# Authors that do not identify a person; each occurrence counts as its own user.
AUTHOR_SENTINELS = frozenset({"", "[deleted]", "[removed]"})


@dataclass(frozen=True)
class Post:
    id: str
    created_utc: int
    title: str
    body: str
    author: str = "[deleted]"
    num_comments: int = 0
    in_window: bool = True

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "Post":
        return cls(**d)

    @property
    def text(self) -> str:
        return f"{self.title}\n{self.body}" if self.body else self.title


# Posts that passed filter_posts; same shape, stronger body invariant.
CleanPost = Post


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str

    def to_json(self) -> dict:
        return {"line": self.line, "reason": self.reason}


@dataclass
class IngestResult:
    posts: list[Post]
    rejects: list[Reject]
    out_of_window: int = 0


class RecordError(ValueError):
    pass


def _parse_record(line: str, window: tuple[int, int] | None) -> Post:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as e:
        raise RecordError(f"invalid JSON: {e.msg} at column {e.colno}") from None
    if not isinstance(rec, dict):
        raise RecordError("record is not an object")
    if "body" not in rec and "selftext" in rec:
        rec["body"] = rec["selftext"]
    missing = [f for f in REQUIRED_FIELDS if f not in rec]
    if missing:
        raise RecordError("missing field(s): " + ", ".join(missing))

    post_id = rec["id"]
    if not isinstance(post_id, str) or not post_id.strip():
        raise RecordError("id must be a non-empty string")
    ts = rec["created_utc"]
    if isinstance(ts, str):
        try:
            ts = float(ts)
        except ValueError:
            raise RecordError(f"created_utc is not numeric: {ts!r}") from None
    if isinstance(ts, bool) or not isinstance(ts, (int, float)):
        raise RecordError("created_utc is not numeric")
    ts = int(ts)
    title = rec["title"] if rec["title"] is not None else ""
    body = rec["body"] if rec["body"] is not None else ""
    if not isinstance(title, str) or not isinstance(body, str):
        raise RecordError("title and body must be strings")
    author = rec.get("author")
    author = "[deleted]" if author is None else str(author)
    n_comments = rec.get("num_comments", 0) or 0
    if isinstance(n_comments, bool) or not isinstance(n_comments, int) or n_comments < 0:
        raise RecordError("num_comments must be a non-negative integer")
    in_window = window is None or window[0] <= ts <= window[1]
    return Post(post_id, ts, title, body, author, n_comments, in_window)


def ingest(path: str | Path, window: tuple[int, int] | None = DEFAULT_WINDOW) -> IngestResult:
    """Read a JSONL post file.

    Malformed lines and duplicate ids are collected as rejects (1-based line
    numbers) rather than raised.  Blank lines are skipped silently.  Posts
    outside ``window`` are kept with ``in_window=False``.
    """
    posts: list[Post] = []
    rejects: list[Reject] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                post = _parse_record(line, window)
            except RecordError as e:
                rejects.append(Reject(lineno, str(e)))
                continue
            if post.id in seen:
                rejects.append(Reject(lineno, f"duplicate id {post.id!r}"))
                continue
            seen.add(post.id)
            posts.append(post)
    n_out = sum(not p.in_window for p in posts)
    if rejects:
        log.warning("%s: %d malformed line(s) rejected", path, len(rejects))
    if n_out:
        log.info("%s: %d post(s) outside the date window (kept, flagged)", path, n_out)
    return IngestResult(posts, rejects, n_out)


@dataclass
class FilterResult:
    posts: list[Post]
    dropped: Counter = field(default_factory=Counter)


def drop_reason(post: Post, case_sensitive: bool = True, keep_title_only: bool = False) -> str | None:
    body = post.body.strip()
    probe = body if case_sensitive else body.lower()
    if probe == "[removed]":
        return "removed"
    if probe == "[deleted]":
        return "deleted"
    if not body and not (keep_title_only and post.title.strip()):
        return "empty"
    return None


def filter_posts(
    posts: Iterable[Post], case_sensitive: bool = True, keep_title_only: bool = False
) -> FilterResult:
    """Drop tombstoned and empty posts, tallying why each was dropped."""
    kept = []
    dropped: Counter = Counter({"removed": 0, "deleted": 0, "empty": 0})
    for p in posts:
        reason = drop_reason(p, case_sensitive, keep_title_only)
        if reason is None:
            kept.append(p)
        else:
            dropped[reason] += 1
    return FilterResult(kept, dropped)


def posts_per_user(posts: Sequence[Post]) -> float:
    """Posts divided by distinct authors; 0.0 for an empty corpus.

    Sentinel authors (deleted accounts, blanks) are each counted as a distinct
    user, so a corpus of only deleted authors yields 1.0.
    """
    if not posts:
        return 0.0
    named = {p.author for p in posts if p.author not in AUTHOR_SENTINELS}
    n_sentinel = sum(p.author in AUTHOR_SENTINELS for p in posts)
    return len(posts) / (len(named) + n_sentinel)


@dataclass(frozen=True)
class CorpusStats:
    raw_count: int
    clean_count: int
    avg_comments: float
    posts_per_user: float
    degenerate: bool = False

    def to_json(self) -> dict:
        return asdict(self)


def corpus_stats(raw: Sequence[Post], clean: Sequence[Post]) -> CorpusStats:
    raw_ids = {p.id for p in raw}
    stray = [p.id for p in clean if p.id not in raw_ids]
    if stray:
        raise ValueError(f"clean posts not present in raw corpus: {stray[:5]}")
    if not clean:
        return CorpusStats(len(raw), 0, 0.0, 0.0, degenerate=True)
    avg = sum(p.num_comments for p in clean) / len(clean)
    return CorpusStats(len(raw), len(clean), avg, posts_per_user(clean))


def write_posts(posts: Iterable[Post], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in posts:
            fh.write(json.dumps(p.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def read_posts(path: str | Path) -> list[Post]:
    with open(path, encoding="utf-8") as fh:
        return [Post.from_json(json.loads(line)) for line in fh if line.strip()]


def write_rejects(rejects: Iterable[Reject], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in rejects:
            fh.write(json.dumps(r.to_json()) + "\n")
