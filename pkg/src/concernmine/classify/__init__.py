"""Zero-shot topic classification through a pluggable completion backend."""
import json
from pathlib import Path

from .backends import (ApiError, BackendConfig, BackendError, CachedBackend, Completion,
                       HttpChatBackend, MockBackend, TransportError, cache_key, load_keywords,
                       make_backend)
from .classifier import MODES, classify_corpus, classify_post, classify_text, main_topic
from .parse import (ClassificationResult, ParseError, format_classification, match_topic,
                    parse_classification)
from .prompts import build_classification_prompt, build_summary_prompt, template, unwrap
from .taxonomy import BY_ID, TAXONOMY, TOPIC_IDS, MergeMap, TaxonomyTopic, topic_name


def complete(prompt: str, backend) -> str:
    """Raw response text for ``prompt``; ``backend`` is a backend object or a :class:`BackendConfig`."""
    if isinstance(backend, BackendConfig):
        backend = make_backend(backend)
    return backend.complete(prompt).text


def write_results(path, results) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_json(), sort_keys=True, ensure_ascii=False) + "\n")


def read_results(path) -> list[ClassificationResult]:
    return [ClassificationResult.from_json(json.loads(line))
            for line in Path(path).read_text("utf-8").splitlines() if line.strip()]
