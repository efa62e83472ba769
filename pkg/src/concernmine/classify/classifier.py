from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Sequence

from ..corpus import Post
from .backends import Backend
from .parse import ClassificationResult, ParseError, parse_classification
from .prompts import build_classification_prompt, build_summary_prompt
from .taxonomy import MergeMap

log = logging.getLogger(__name__)

MODES = ("direct", "with_summary")


def classify_text(text: str, backend: Backend, mode: str = "direct", run_index: int = 0,
                  max_parse_retries: int = 2, post_id: str = "") -> ClassificationResult:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not text.strip():
        raise ValueError(f"post {post_id!r} has no text to classify")
    error: ParseError | None = None
    for attempt in range(max_parse_retries + 1):
        subject = text
        if mode == "with_summary":
            summary = backend.complete(build_summary_prompt(text), run_index=run_index, attempt=attempt).text
            subject = summary.strip() or text
        raw = backend.complete(build_classification_prompt(subject), run_index=run_index, attempt=attempt).text
        try:
            result = parse_classification(raw, post_id)
        except ParseError as e:
            log.warning("post %s: unparseable response on attempt %d: %r", post_id, attempt + 1, raw[:120])
            error = e
            continue
        return replace(result, model=backend.model, temperature=backend.temperature, attempts=attempt + 1)
    assert error is not None
    raise error


def classify_post(post: Post, backend: Backend, mode: str = "direct", run_index: int = 0,
                  max_parse_retries: int = 2) -> ClassificationResult:
    """Prompt, complete, parse; an unparseable response is re-queried up to ``max_parse_retries`` times."""
    return classify_text(post.text, backend, mode, run_index, max_parse_retries, post.id)


def classify_corpus(posts: Sequence[Post], backend: Backend, mode: str = "direct", run_index: int = 0,
                    max_in_flight: int = 4, max_parse_retries: int = 2) -> list[ClassificationResult]:
    """Classify posts with at most ``max_in_flight`` concurrent requests; output follows input order."""
    if max_in_flight <= 1 or len(posts) <= 1:
        return [classify_post(p, backend, mode, run_index, max_parse_retries) for p in posts]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        futures = [pool.submit(classify_post, p, backend, mode, run_index, max_parse_retries) for p in posts]
        return [f.result() for f in futures]


def main_topic(result: ClassificationResult, merge_map: MergeMap | None = None) -> str:
    top = result.main
    return merge_map(top) if merge_map is not None else top
