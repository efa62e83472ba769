"""Completion backends: a deterministic keyword mock, an HTTP chat client, and a disk cache."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
import threading
import time
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Protocol

import httpx

from .prompts import unwrap
from .taxonomy import TOPIC_IDS, topic_name

log = logging.getLogger(__name__)

BACKEND_KINDS = ("mock", "http_chat")


class BackendError(RuntimeError):
    pass


class ApiError(BackendError):
    def __init__(self, status: int, body: str):
        super().__init__(f"backend returned HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


class TransportError(BackendError):
    pass


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4"
    temperature: float = 1.0
    max_retries: int = 5
    timeout: float = 60.0
    cache_dir: str | None = None
    api_key_env: str = "OPENAI_API_KEY"
    backoff_base: float = 1.0
    backoff_max: float = 60.0
    max_in_flight: int = 4
    keywords_path: str | None = None

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"backend kind must be one of {BACKEND_KINDS}, got {self.kind!r}")
        if not self.temperature >= 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "BackendConfig":
        return cls(**d)


@dataclass(frozen=True)
class Completion:
    text: str
    attempts: int = 1
    cached: bool = False


class Backend(Protocol):
    model: str
    temperature: float

    def complete(self, prompt: str, run_index: int = 0, attempt: int = 0) -> Completion: ...


# Mock

def load_keywords(path: str | Path | None = None) -> dict[str, list[str]]:
    if path is None:
        raw = resources.files("concernmine").joinpath("data/mock_keywords.json").read_text("utf-8")
    else:
        raw = Path(path).read_text("utf-8")
    doc = json.loads(raw)
    table = doc["keywords"]
    unknown = set(table) - set(TOPIC_IDS)
    if unknown:
        raise ValueError(f"keyword table has unknown topics: {sorted(unknown)}")
    return {t: list(table.get(t, [])) for t in TOPIC_IDS}


class MockBackend:
    """Keyword-count scorer that answers in the classification response format.

    Each topic scores the number of word-bounded, case-insensitive keyword
    hits in the substituted text.  The top three positive scores become the
    answer, weighted proportionally and rounded to 4 places, ties broken by
    taxonomy order.  A text with no hits answers ``utility issues: 1.0``.
    Summary prompts get the first ten words of the text back.
    """

    model = "mock-keywords-v1"
    fallback = "utility"

    def __init__(self, keywords: dict[str, list[str]] | None = None, temperature: float = 1.0):
        self.keywords = keywords if keywords is not None else load_keywords()
        self.temperature = temperature
        self._patterns = {
            t: [re.compile(r"(?<!\w)" + re.escape(k).replace(r"\ ", r"\s+") + r"(?!\w)", re.IGNORECASE)
                for k in kws]
            for t, kws in self.keywords.items()
        }
        self.calls = 0

    def scores(self, text: str) -> dict[str, int]:
        return {t: sum(len(p.findall(text)) for p in pats) for t, pats in self._patterns.items()}

    def respond(self, text: str) -> str:
        sc = self.scores(text)
        ranked = sorted((t for t in TOPIC_IDS if sc[t] > 0), key=lambda t: (-sc[t], TOPIC_IDS.index(t)))[:3]
        if not ranked:
            return f"{topic_name(self.fallback)} issues: 1.0"
        total = sum(sc[t] for t in ranked)
        return "; ".join(f"{topic_name(t)} issues: {round(sc[t] / total, 4)}" for t in ranked)

    def complete(self, prompt: str, run_index: int = 0, attempt: int = 0) -> Completion:
        self.calls += 1
        kind, text = unwrap(prompt)
        if kind == "summary":
            return Completion(" ".join(text.split()[:10]))
        return Completion(self.respond(text))


# HTTP

def _retry_after(resp: httpx.Response) -> float | None:
    value = resp.headers.get("retry-after")
    if value is None:
        return None
    try:
        return max(0.0, float(value))
    except ValueError:
        return None


class HttpChatBackend:
    """Chat-completion client.  The bearer token is read from ``config.api_key_env``."""

    def __init__(self, config: BackendConfig, sleep: Callable[[float], None] = time.sleep,
                 client: httpx.Client | None = None):
        self.config = config
        self.model = config.model
        self.temperature = config.temperature
        self.sleep = sleep
        self._client = client or httpx.Client(timeout=config.timeout)
        self.requests = 0

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.config.api_key_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        else:
            log.warning("%s is not set; sending request without a bearer token", self.config.api_key_env)
        return headers

    def _backoff(self, attempt: int) -> float:
        return min(self.config.backoff_max, self.config.backoff_base * 2 ** attempt)

    def complete(self, prompt: str, run_index: int = 0, attempt: int = 0) -> Completion:
        payload = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        last_error: str = ""
        for i in range(self.config.max_retries + 1):
            wait = self._backoff(i)
            try:
                self.requests += 1
                resp = self._client.post(self.config.endpoint, json=payload, headers=self._headers(),
                                         timeout=self.config.timeout)
            except httpx.TimeoutException as e:
                last_error = f"timeout: {e}"
            except httpx.TransportError as e:
                last_error = f"transport: {e}"
            else:
                if resp.status_code == 429 or resp.status_code >= 500:
                    last_error = f"HTTP {resp.status_code}"
                    hint = _retry_after(resp)
                    if hint is not None:
                        wait = min(self.config.backoff_max, hint)
                    if i == self.config.max_retries:
                        raise ApiError(resp.status_code, resp.text)
                elif resp.status_code >= 400 or resp.status_code < 200:
                    raise ApiError(resp.status_code, resp.text)
                else:
                    try:
                        text = resp.json()["choices"][0]["message"]["content"]
                    except (ValueError, KeyError, IndexError, TypeError) as e:
                        raise ApiError(resp.status_code, f"malformed response body ({e}): {resp.text}")
                    return Completion(text if isinstance(text, str) else str(text), attempts=i + 1)
            if i < self.config.max_retries:
                log.info("request failed (%s); retrying in %.2fs", last_error, wait)
                self.sleep(wait)
        raise TransportError(f"giving up after {self.config.max_retries + 1} attempts ({last_error})")

    def close(self) -> None:
        self._client.close()


# Cache

def cache_key(prompt: str, model: str, temperature: float, run_index: int, attempt: int = 0) -> str:
    blob = json.dumps({"prompt": prompt, "model": model, "temperature": float(temperature),
                       "run_index": int(run_index), "attempt": int(attempt)},
                      sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class CachedBackend:
    """One JSON file per response, written atomically; hits never touch the inner backend."""

    def __init__(self, inner: Backend, cache_dir: str | Path):
        self.inner = inner
        self.model = inner.model
        self.temperature = inner.temperature
        self.dir = Path(cache_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()

    def path_for(self, key: str) -> Path:
        return self.dir / f"{key}.json"

    def complete(self, prompt: str, run_index: int = 0, attempt: int = 0) -> Completion:
        key = cache_key(prompt, self.model, self.temperature, run_index, attempt)
        path = self.path_for(key)
        if path.exists():
            try:
                doc = json.loads(path.read_text("utf-8"))
                with self._lock:
                    self.hits += 1
                return Completion(doc["text"], doc.get("attempts", 1), cached=True)
            except (ValueError, KeyError):
                log.warning("ignoring corrupt cache entry %s", path)
        result = self.inner.complete(prompt, run_index=run_index, attempt=attempt)
        with self._lock:
            self.misses += 1
        doc = {"key": key, "model": self.model, "temperature": self.temperature,
               "run_index": run_index, "attempt": attempt, "text": result.text,
               "attempts": result.attempts}
        fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, sort_keys=True, ensure_ascii=False)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return result


def make_backend(config: BackendConfig, **kw) -> Backend:
    if config.kind == "mock":
        kws = load_keywords(config.keywords_path) if config.keywords_path else None
        backend: Backend = MockBackend(kws, temperature=config.temperature)
    else:
        backend = HttpChatBackend(config, **kw)
    if config.cache_dir:
        backend = CachedBackend(backend, config.cache_dir)
    return backend
