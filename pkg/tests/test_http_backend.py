import json

import pytest

from concernmine.classify import (ApiError, BackendConfig, CachedBackend, HttpChatBackend, TransportError,
                                  build_classification_prompt, classify_corpus, make_backend)
from concernmine.corpus import Post

from stub_server import StubServer


def cfg(url, **kw):
    base = dict(kind="http_chat", endpoint=url, model="stub-model", temperature=0.2, max_retries=3,
                timeout=2.0, backoff_base=0.0, api_key_env="CM_TEST_TOKEN")
    base.update(kw)
    return BackendConfig(**base)


def test_request_shape_and_bearer(monkeypatch):
    monkeypatch.setenv("CM_TEST_TOKEN", "s3cret")
    with StubServer() as srv:
        b = HttpChatBackend(cfg(srv.url))
        out = b.complete(build_classification_prompt("hello"))
    assert out.text == "utility: 1.0" and out.attempts == 1
    req = srv.requests[0]
    assert req["headers"]["Authorization"] == "Bearer s3cret"
    assert req["body"]["model"] == "stub-model" and req["body"]["temperature"] == 0.2
    assert req["body"]["messages"] == [{"role": "user", "content": build_classification_prompt("hello")}]


def test_429_twice_then_success(monkeypatch):
    monkeypatch.setenv("CM_TEST_TOKEN", "t")
    sleeps = []
    script = [(429, "slow down", {"Retry-After": "0.25"}), (429, "slow down", {})]
    with StubServer(script) as srv:
        b = HttpChatBackend(cfg(srv.url, backoff_base=0.5), sleep=sleeps.append)
        out = b.complete("p")
    assert out.attempts == 3 and len(srv.requests) == 3
    assert sleeps == [0.25, 1.0]  # server hint, then exponential backoff (0.5 * 2**1)


def test_5xx_retried_then_api_error():
    script = [(503, "down", {})] * 4
    with StubServer(script) as srv:
        b = HttpChatBackend(cfg(srv.url, max_retries=3), sleep=lambda s: None)
        with pytest.raises(ApiError) as e:
            b.complete("p")
    assert e.value.status == 503 and e.value.body == "down" and len(srv.requests) == 4


def test_client_error_not_retried():
    with StubServer([(401, '{"error": "bad key"}', {})]) as srv:
        b = HttpChatBackend(cfg(srv.url), sleep=lambda s: None)
        with pytest.raises(ApiError) as e:
            b.complete("p")
    assert e.value.status == 401 and "bad key" in e.value.body and len(srv.requests) == 1


def test_malformed_body_is_api_error():
    with StubServer([(200, '{"choices": []}', {})]) as srv:
        with pytest.raises(ApiError):
            HttpChatBackend(cfg(srv.url), sleep=lambda s: None).complete("p")


def test_timeout_surfaces_as_transport_error():
    with StubServer([("sleep", 1.0)] * 3) as srv:
        b = HttpChatBackend(cfg(srv.url, timeout=0.2, max_retries=2), sleep=lambda s: None)
        with pytest.raises(TransportError, match="3 attempts"):
            b.complete("p")


def test_connection_refused_is_transport_error():
    b = HttpChatBackend(cfg("http://127.0.0.1:9/none", max_retries=1), sleep=lambda s: None)
    with pytest.raises(TransportError):
        b.complete("p")


def test_cached_second_run_makes_no_requests(tmp_path, monkeypatch):
    monkeypatch.setenv("CM_TEST_TOKEN", "t")
    posts = [Post(f"p{i}", 0, "t", f"body {i}", "u") for i in range(5)]
    with StubServer() as srv:
        c = cfg(srv.url, cache_dir=str(tmp_path / "cache"))
        first = classify_corpus(posts, make_backend(c), max_in_flight=3)
        n = len(srv.requests)
        second = classify_corpus(posts, make_backend(c), max_in_flight=3)
        assert len(srv.requests) == n == 5
    assert [r.topics for r in first] == [r.topics for r in second]
    assert isinstance(make_backend(c), CachedBackend)


def test_missing_token_warns(monkeypatch, caplog):
    monkeypatch.delenv("CM_TEST_TOKEN", raising=False)
    with StubServer() as srv:
        HttpChatBackend(cfg(srv.url)).complete("p")
    assert "Authorization" not in srv.requests[0]["headers"]
    assert "CM_TEST_TOKEN" in caplog.text
