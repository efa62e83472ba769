import hashlib
import json
import random
import string

import pytest
from hypothesis import given, strategies as st

from concernmine.classify import (TAXONOMY, TOPIC_IDS, BackendConfig, CachedBackend, ClassificationResult,
                                  Completion, MergeMap, MockBackend, ParseError, build_classification_prompt,
                                  build_summary_prompt, cache_key, classify_corpus, classify_post, complete,
                                  format_classification, main_topic, match_topic, parse_classification,
                                  read_results, unwrap, write_results)
from concernmine.classify.parse import levenshtein
from concernmine.corpus import Post

CLASSIFICATION_SNAPSHOT = (
    "The text is from an online discussion platform mostly posted by tenants. Classify the text X with "
    "weight (summing to 1) into at most three and at least one of the categories in utility issues or pest "
    "issues or mold issues or interior decoration issues or fee dispute issues or noise complaint issues or "
    "evicted by landlord issues or rent increase issues or deposit dispute issues or pet issues or landlord "
    "harassment issues or personal income decrease issues or sublease issues or covid risk issues. Return the "
    "results in the format of topic: weight separated by semicolon. order returned topics from highest to "
    "lowest weight."
)


def post(pid, body, title="t"):
    return Post(pid, 1600000000, title, body, "u", 0)


# prompts

def test_classification_prompt_snapshot():
    p = build_classification_prompt("X")
    assert p == CLASSIFICATION_SNAPSHOT
    assert "The text is from an online discussion platform mostly posted by tenants." in p
    assert p.endswith("order returned topics from highest to lowest weight.")


def test_prompt_lists_taxonomy_in_order():
    p = build_classification_prompt("X")
    positions = [p.index(f" {t.name} issues") for t in TAXONOMY]
    assert positions == sorted(positions) and len(TAXONOMY) == 14
    assert len(set(TOPIC_IDS)) == 14


def test_summary_prompt():
    assert build_summary_prompt("Y") == "Summarize the following text in 10 words: Y."


def test_prompt_substitution_is_verbatim():
    text = 'quotes " \\ {braces} [text] <b>&amp;</b>\n\ttabs'
    p = build_classification_prompt(text)
    assert unwrap(p) == ("classification", text)
    assert unwrap(build_summary_prompt(text)) == ("summary", text)
    assert unwrap("random")[0] is None
    with pytest.raises(ValueError):
        build_classification_prompt("")


# taxonomy / merge map

def test_merge_map_default():
    mm = MergeMap.default()
    assert mm("pest") == mm("mold") == "health_hazards"
    assert len(mm.display_topics) == 13 and not mm.is_identity()
    assert MergeMap.identity().is_identity()
    with pytest.raises(ValueError):
        MergeMap({"utility": "utility"})
    m2 = MergeMap.with_merges({"health_hazards": ["pest", "mold"], "disputes": ["fee_dispute", "deposit_dispute"]})
    assert len(m2.display_topics) == 12


# parser

def test_parse_literal_example():
    r = parse_classification("{utility: 0.7; evicted by landlord: 0.2; deposit dispute: 0.1}")
    assert r.topics == (("utility", 0.7), ("evicted_by_landlord", 0.2), ("deposit_dispute", 0.1))


def test_parse_suffix_case():
    assert parse_classification("Mold Issues: 1.0").topics == (("mold", 1.0),)


def test_parse_renormalizes():
    r = parse_classification("fee dispute: 0.5; noise complaint: 0.3")
    assert [t for t, _ in r.topics] == ["fee_dispute", "noise_complaint"]
    assert r.topics[0][1] == pytest.approx(0.625, abs=1e-12)
    assert r.topics[1][1] == pytest.approx(0.375, abs=1e-12)


def test_parse_prose_and_percent():
    r = parse_classification("Sure! Here you go:\n- Rent Increase: 60%\n- pet issues: 40%\nThanks")
    assert r.topics == (("rent_increase", 0.6), ("pet", 0.4))


def test_parse_sorts_stably():
    r = parse_classification("pet: 0.25; mold: 0.5; sublease: 0.25")
    assert r.ranked == ["mold", "pet", "sublease"]


def test_parse_more_than_three_keeps_top3(caplog):
    r = parse_classification("pet: 0.1; mold: 0.4; utility: 0.3; sublease: 0.2")
    assert r.ranked == ["mold", "utility", "sublease"]
    assert any("kept top 3" in w for w in r.warnings)


def test_parse_drops_unknown_and_nonpositive():
    r = parse_classification("astrology: 0.5; utility: 0.4; pet: 0; mold: -0.1")
    assert r.ranked == ["utility"] and r.topics[0][1] == 1.0
    assert len(r.warnings) == 3


def test_parse_fuzzy():
    assert match_topic("utilty issues") == "utility"
    assert match_topic("Noise Complaints") == "noise_complaint"
    assert match_topic("COVID-19") == "covid_risk"
    assert match_topic("sublease_issues") == "sublease"
    assert match_topic("something else entirely") is None


def test_parse_errors():
    for raw in ["", "no weights here", "utility; pet", "astrology: 1.0"]:
        with pytest.raises(ParseError):
            parse_classification(raw)


def test_parse_duplicates_keep_heaviest():
    r = parse_classification("pet: 0.2; pet issues: 0.5; mold: 0.3")
    assert r.ranked == ["pet", "mold"] and r.topics[0][1] == pytest.approx(0.625)


def test_levenshtein():
    assert levenshtein("kitten", "sitting") == 3 and levenshtein("", "abc") == 3 and levenshtein("a", "a") == 0


@st.composite
def results(draw):
    n = draw(st.integers(1, 3))
    topics = draw(st.permutations(TOPIC_IDS))[:n]
    raw = sorted(draw(st.lists(st.floats(0.01, 1.0, allow_nan=False), min_size=n, max_size=n)), reverse=True)
    total = sum(raw)
    ws = [w / total for w in raw]
    return ClassificationResult("p", tuple(zip(topics, ws)))


@given(results())
def test_round_trip_property(r):
    assert parse_classification(format_classification(r), "p") == r


@given(st.text(alphabet=string.printable + "–é", max_size=120))
def test_parser_total_on_arbitrary_text(raw):
    try:
        r = parse_classification(raw)
    except ParseError:
        return
    assert 1 <= len(r.topics) <= 3
    assert abs(sum(w for _, w in r.topics) - 1) <= 1e-9


@given(st.text(max_size=40))
def test_match_topic_is_a_function(name):
    assert match_topic(name) == match_topic(name)


def test_result_invariants_enforced():
    with pytest.raises(ValueError):
        ClassificationResult("p", ())
    with pytest.raises(ValueError):
        ClassificationResult("p", (("pet", 0.3), ("mold", 0.7)))
    with pytest.raises(ValueError):
        ClassificationResult("p", (("pet", 0.5),))
    r = ClassificationResult("p", (("pet", 0.7), ("mold", 0.3)), raw_response="x", attempts=2)
    assert ClassificationResult.from_json(r.to_json()) == r


def test_main_topic():
    r = parse_classification("utility: 0.7; evicted by landlord: 0.2; deposit dispute: 0.1")
    assert main_topic(r, MergeMap.identity()) == "utility"
    assert main_topic(parse_classification("mold: 0.6; pet: 0.4"), MergeMap.default()) == "health_hazards"
    assert main_topic(parse_classification("sublease: 1")) == "sublease"


# mock backend

def test_mock_mold_leak_ranks_mold_first():
    m = MockBackend()
    text = complete(build_classification_prompt("A leak under the sink and now there is mold."), m)
    assert text.startswith("mold issues:")
    # the keyword table is the oracle
    scores = m.scores("A leak under the sink and now there is mold.")
    assert scores["mold"] == 2 and max(scores.values()) == 2


def test_mock_fallback_and_summary():
    m = MockBackend()
    assert m.complete(build_classification_prompt("zzz qqq")).text == "utility issues: 1.0"
    s = m.complete(build_summary_prompt("one two three four five six seven eight nine ten eleven")).text
    assert s == "one two three four five six seven eight nine ten"


def test_complete_accepts_config():
    assert complete(build_classification_prompt("my dog"), BackendConfig(kind="mock")).startswith("pet issues")


def test_backend_config_validation():
    with pytest.raises(ValueError):
        BackendConfig(temperature=-0.1)
    with pytest.raises(ValueError):
        BackendConfig(kind="carrier-pigeon")
    assert BackendConfig().temperature == 1.0 and BackendConfig(temperature=0.2).temperature == 0.2


# classifier

def test_classify_post_modes():
    m = MockBackend()
    p = post("a", "There is black mold and a leak. My dog is sick.")
    direct = classify_post(p, m)
    two = classify_post(p, m, mode="with_summary")
    assert direct.main == "mold" and isinstance(two, ClassificationResult)
    assert direct.model == m.model and direct.attempts == 1


def test_classify_deterministic_over_corpus(tmp_path):
    from concernmine.synth import tenant_corpus
    from concernmine.corpus import filter_posts
    posts = filter_posts(tenant_corpus(60, seed=2).posts).posts
    a = classify_corpus(posts, MockBackend(), max_in_flight=4)
    b = classify_corpus(posts, MockBackend(), max_in_flight=1)
    assert [r.post_id for r in a] == [p.id for p in posts]
    write_results(tmp_path / "a.jsonl", a)
    write_results(tmp_path / "b.jsonl", b)
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    assert read_results(tmp_path / "a.jsonl") == a


class FlakyBackend:
    """Answers garbage for the first ``bad`` attempts of each prompt."""
    model, temperature = "flaky", 1.0

    def __init__(self, bad):
        self.bad = bad
        self.calls = []

    def complete(self, prompt, run_index=0, attempt=0):
        self.calls.append(attempt)
        if attempt < self.bad:
            return Completion("I'm sorry, I cannot help with that.")
        return Completion("pet: 0.6; noise complaint: 0.4")


def test_parse_failure_requeried():
    b = FlakyBackend(1)
    r = classify_post(post("a", "x"), b)
    assert r.attempts == 2 and b.calls == [0, 1] and r.main == "pet"
    with pytest.raises(ParseError):
        classify_post(post("a", "x"), FlakyBackend(3))
    b = FlakyBackend(3)
    with pytest.raises(ParseError):
        classify_post(post("a", "x"), b)
    assert b.calls == [0, 1, 2]


def test_classify_empty_post_rejected():
    with pytest.raises(ValueError):
        classify_post(Post("a", 0, "", "", "u"), MockBackend())


# cache

class CountingBackend:
    model, temperature = "count", 0.2

    def __init__(self):
        self.n = 0

    def complete(self, prompt, run_index=0, attempt=0):
        self.n += 1
        return Completion(f"utility: 1.0 ; run {run_index}")


def test_cache_hits_skip_inner(tmp_path):
    inner = CountingBackend()
    c = CachedBackend(inner, tmp_path / "cache")
    a = c.complete("hello", run_index=0)
    b = c.complete("hello", run_index=0)
    assert inner.n == 1 and b.cached and b.text == a.text
    c.complete("hello", run_index=1)
    assert inner.n == 2
    c2 = CachedBackend(CountingBackend(), tmp_path / "cache")
    assert c2.complete("hello", run_index=1).cached and c2.inner.n == 0
    files = list((tmp_path / "cache").glob("*.json"))
    assert len(files) == 2
    key = cache_key("hello", "count", 0.2, 0)
    assert (tmp_path / "cache" / f"{key}.json").exists()


def test_cache_key_components():
    base = cache_key("p", "m", 1.0, 0)
    assert base == hashlib.sha256(json.dumps({"attempt": 0, "model": "m", "prompt": "p", "run_index": 0,
                                              "temperature": 1.0}, sort_keys=True).encode()).hexdigest()
    assert len({base, cache_key("q", "m", 1.0, 0), cache_key("p", "n", 1.0, 0), cache_key("p", "m", 0.2, 0),
                cache_key("p", "m", 1.0, 1), cache_key("p", "m", 1.0, 0, 1)}) == 6


def test_cache_corrupt_entry_recomputed(tmp_path):
    inner = CountingBackend()
    c = CachedBackend(inner, tmp_path)
    key = cache_key("x", inner.model, inner.temperature, 0)
    (tmp_path / f"{key}.json").write_text("{not json")
    assert not c.complete("x").cached and inner.n == 1
    assert c.complete("x").cached
