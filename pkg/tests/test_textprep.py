from hypothesis import given, strategies as st
import pytest

from concernmine.textprep import (BagOfWords, TokenizedDoc, VocabularyError, build_vocabulary, lemmatize,
                                  load_stoplist, normalize_tokenize, preprocess, remove_stopwords, to_bow)

STOP = load_stoplist()


def test_tokenize_examples():
    assert normalize_tokenize("My Landlord, again!") == ["my", "landlord", "again"]
    assert normalize_tokenize("") == []
    assert normalize_tokenize("rent $1500/mo due") == ["rent", "mo", "due"]


def test_tokenize_unicode_nfc():
    assert normalize_tokenize("café café") == ["café", "café"]


def test_stoplist_bundled():
    assert 150 <= len(STOP) <= 200
    assert {"the", "is", "and"} <= STOP and "landlord" not in STOP


def test_remove_stopwords_examples():
    assert remove_stopwords(["the", "landlord", "is", "late"], STOP) == ["landlord", "late"]
    assert remove_stopwords([], STOP) == []
    assert remove_stopwords(["landlord", "mold"], STOP) == ["landlord", "mold"]


@given(st.lists(st.sampled_from(["the", "landlord", "is", "rent", "a", "mold", "of", "and", "lease"])))
def test_remove_stopwords_idempotent(toks):
    once = remove_stopwords(toks, STOP)
    assert remove_stopwords(once, STOP) == once
    assert [t for t in toks if t not in STOP] == once


@pytest.mark.parametrize("word,lemma", [
    ("tenants", "tenant"), ("water", "water"), ("charges", "charge"), ("parties", "party"),
    ("boxes", "box"), ("glass", "glass"), ("heating", "heat"), ("running", "run"),
    ("living", "live"), ("located", "locate"), ("gas", "gas"), ("bus", "bus"), ("agreed", "agree"),
])
def test_lemmatize(word, lemma):
    assert lemmatize(word) == lemma


@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=15))
def test_lemmatize_never_empty(w):
    assert lemmatize(w)


def test_preprocess_drops_stopwords_after_lemmatizing():
    doc = preprocess("p", "The tenants were evicted from their apartments", STOP)
    assert all(t not in STOP and len(t) > 1 and " " not in t for t in doc.tokens)
    assert "tenant" in doc.tokens


def _docs(token_lists):
    return [TokenizedDoc(f"d{i}", tuple(t)) for i, t in enumerate(token_lists)]


def test_vocabulary_examples():
    v = build_vocabulary(_docs([["landlord"]] * 3), min_df=1, max_df_fraction=1.0)
    assert "landlord" in v
    docs = _docs([["rare"]] + [["common"]] * 99)
    v = build_vocabulary(docs, min_df=2, max_df_fraction=1.0)
    assert "rare" not in v and "common" in v


def test_vocabulary_matches_brute_force():
    lists = [["rent", "mold"], ["rent", "pet"], ["mold", "fee"], ["rent", "fee", "fee"], ["pet"],
             ["mold", "rent"], ["deposit"], ["rent"], ["fee", "pet"], ["mold"]]
    v = build_vocabulary(_docs(lists), min_df=2, max_df_fraction=0.4)
    df = {t: sum(t in l for l in lists) for l in lists for t in l}
    expected = sorted(t for t, n in df.items() if 2 <= n <= 4)
    assert list(v.terms) == expected == ["fee", "mold", "pet"]
    assert [v.index(t) for t in expected] == [0, 1, 2]


def test_vocabulary_empty_is_error():
    with pytest.raises(VocabularyError):
        build_vocabulary(_docs([["a"], ["b"]]), min_df=5)


def test_to_bow_examples():
    v = build_vocabulary(_docs([["rent", "mold"]]), min_df=1, max_df_fraction=1.0)
    bow = to_bow(TokenizedDoc("x", ("rent", "rent", "mold")), v)
    assert bow.items == ((v.index("mold"), 1), (v.index("rent"), 2))
    assert to_bow(TokenizedDoc("x", ("zzz",)), v).items == ()
    assert to_bow(TokenizedDoc("x", ()), v).items == ()


@given(st.lists(st.sampled_from(["rent", "mold", "pet", "fee", "oov", "other"]), max_size=40))
def test_bow_count_equals_in_vocab_tokens(toks):
    v = build_vocabulary(_docs([["rent", "mold", "pet", "fee"]]), min_df=1, max_df_fraction=1.0)
    bow = to_bow(TokenizedDoc("x", tuple(toks)), v)
    assert bow.n_tokens == sum(t in v for t in toks)
    idx = [i for i, _ in bow.items]
    assert idx == sorted(set(idx)) and all(c >= 1 for _, c in bow.items)
    assert to_bow(TokenizedDoc("x", tuple(toks)), v) == bow
