"""The two prompt templates, stored verbatim under ``data/prompts``.

``{text}`` marks the substitution point.  Substitution is plain string
replacement, so post text is inserted byte-for-byte.
"""
from __future__ import annotations

from functools import lru_cache
from importlib import resources

PLACEHOLDER = "{text}"


@lru_cache(maxsize=None)
def template(name: str) -> str:
    return resources.files("concernmine").joinpath(f"data/prompts/{name}.txt").read_text("utf-8")


def _fill(name: str, text: str) -> str:
    if not text:
        raise ValueError("prompt text must be non-empty")
    head, tail = template(name).split(PLACEHOLDER)
    return head + text + tail


def build_classification_prompt(text: str) -> str:
    return _fill("classification", text)


def build_summary_prompt(text: str) -> str:
    return _fill("summary", text)


def unwrap(prompt: str) -> tuple[str | None, str]:
    """Recover ``(template name, substituted text)`` from a built prompt.

    Returns ``(None, prompt)`` when the prompt matches neither template.
    """
    for name in ("classification", "summary"):
        head, tail = template(name).split(PLACEHOLDER)
        if prompt.startswith(head) and prompt.endswith(tail) and len(prompt) > len(head) + len(tail):
            return name, prompt[len(head):len(prompt) - len(tail)]
    return None, prompt
