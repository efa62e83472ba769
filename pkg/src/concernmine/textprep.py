"""Tokenization, stopword removal, lemmatization, and bag-of-words vectors.

Only the topic-model path is preprocessed; classification prompts receive the
raw post text.
"""
from __future__ import annotations

import hashlib
import json
import unicodedata
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

VOWELS = frozenset("aeiou")

# Words the suffix rules would mangle.
LEMMA_EXCEPTIONS = {
    "always": "always", "news": "news", "series": "series", "species": "species",
    "lens": "lens", "means": "means", "premises": "premises", "utilities": "utility",
    "ceiling": "ceiling", "morning": "morning", "evening": "evening", "building": "building",
    "thing": "thing", "something": "something", "nothing": "nothing", "anything": "anything",
    "everything": "everything", "during": "during", "spring": "spring", "string": "string",
    "bring": "bring", "ring": "ring", "king": "king", "wing": "wing", "sing": "sing",
    "bed": "bed", "need": "need", "feed": "feed", "seed": "seed", "speed": "speed",
    "indeed": "indeed", "hundred": "hundred", "children": "child", "people": "people",
    "men": "man", "women": "woman", "mice": "mouse", "feet": "foot", "teeth": "tooth",
    "was": "was", "has": "has", "does": "does", "goes": "go", "yes": "yes", "gas": "gas",
    "bus": "bus", "this": "this", "thus": "thus", "plus": "plus", "status": "status",
    "paid": "pay", "said": "say", "left": "leave", "succeed": "succeed", "exceed": "exceed",
    "proceed": "proceed",
}


def load_stoplist(path: str | Path | None = None) -> frozenset[str]:
    """One lowercase term per line; ``#`` lines are comments."""
    if path is None:
        text = resources.files("concernmine").joinpath("data/stopwords_en.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    terms = (ln.strip() for ln in text.splitlines())
    return frozenset(t.lower() for t in terms if t and not t.startswith("#"))


def normalize_tokenize(text: str) -> list[str]:
    """Lowercase, replace every non-letter with a space, split.

    Numerals vanish with the rest of the non-letters; single-character
    tokens are dropped.
    """
    text = unicodedata.normalize("NFC", text).lower()
    cleaned = "".join(ch if ch.isalpha() else " " for ch in text)
    return [t for t in cleaned.split() if len(t) > 1]


def remove_stopwords(tokens: Iterable[str], stoplist: frozenset[str] | set[str]) -> list[str]:
    return [t for t in tokens if t not in stoplist]


def _has_vowel(s: str) -> bool:
    return any(c in VOWELS for c in s) or (len(s) > 1 and "y" in s[1:])


def _is_cons(word: str, i: int) -> bool:
    c = word[i]
    if c in VOWELS:
        return False
    if c == "y":
        return i == 0 or not _is_cons(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of vowel-consonant sequences (Porter's m)."""
    m, prev_vowel = 0, False
    for i in range(len(stem)):
        cons = _is_cons(stem, i)
        if cons and prev_vowel:
            m += 1
        prev_vowel = not cons
    return m


def _ends_cvc(stem: str) -> bool:
    if len(stem) < 3:
        return False
    return (
        _is_cons(stem, len(stem) - 3)
        and not _is_cons(stem, len(stem) - 2)
        and _is_cons(stem, len(stem) - 1)
        and stem[-1] not in "wxy"
    )


def _restore_e(stem: str) -> str:
    """Undo the stripping of -ed/-ing: collapse doubled consonants, re-add a silent e."""
    if len(stem) >= 2 and stem[-1] == stem[-2] and _is_cons(stem, len(stem) - 1) and stem[-1] not in "lsz":
        return stem[:-1]
    if stem.endswith(("bl", "iz", "dg")):
        return stem + "e"
    if stem.endswith("at") and len(stem) >= 3 and _is_cons(stem, len(stem) - 3):
        return stem + "e"
    if stem[-1] in "cvuz" or (stem[-1] in "gs" and not _is_cons(stem, len(stem) - 2)):
        return stem + "e"
    if stem[-1] == "g" and len(stem) >= 2 and stem[-2] in "nr" and not stem.endswith("ng"):
        return stem + "e"
    if _measure(stem) == 1 and _ends_cvc(stem):
        return stem + "e"
    return stem


def lemmatize(token: str) -> str:
    """Reduce plural and -ed/-ing inflections with deterministic suffix rules.

    >>> lemmatize("tenants"), lemmatize("charges"), lemmatize("water")
    ('tenant', 'charge', 'water')
    """
    if token in LEMMA_EXCEPTIONS:
        return LEMMA_EXCEPTIONS[token]
    if len(token) <= 3:
        return token
    w = token
    if w.endswith("ies") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("s"):
        if w.endswith(("ss", "us", "is")):
            return w
        if w.endswith(("sses", "xes", "ches", "shes", "zzes")):
            return w[:-2]
        return w[:-1]
    if w.endswith("ied") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("eed"):
        # agreed -> agree, but need and feed stay
        return w[:-1] if _measure(w[:-3]) > 0 else w
    for suffix in ("ing", "ed"):
        if w.endswith(suffix):
            stem = w[: -len(suffix)]
            if len(stem) >= 2 and _has_vowel(stem):
                return _restore_e(stem)
            return w
    return w


@dataclass(frozen=True)
class TokenizedDoc:
    post_id: str
    tokens: tuple[str, ...]

    def to_json(self) -> dict:
        return {"post_id": self.post_id, "tokens": list(self.tokens)}

    @classmethod
    def from_json(cls, d: dict) -> "TokenizedDoc":
        return cls(d["post_id"], tuple(d["tokens"]))


def preprocess(post_id: str, text: str, stoplist: frozenset[str]) -> TokenizedDoc:
    toks = remove_stopwords(normalize_tokenize(text), stoplist)
    lemmas = [lemmatize(t) for t in toks]
    # lemmas can land on stopwords ("does" -> "do") or shrink below two letters
    return TokenizedDoc(post_id, tuple(t for t in lemmas if len(t) > 1 and t not in stoplist))


class VocabularyError(ValueError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    doc_freq: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def index(self, term: str) -> int:
        return self._index[term]

    @property
    def V(self) -> int:
        return len(self.terms)

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.terms).encode("utf-8")).hexdigest()

    def to_json(self) -> dict:
        return {"terms": list(self.terms), "doc_freq": list(self.doc_freq)}

    @classmethod
    def from_json(cls, d: dict) -> "Vocabulary":
        return cls(tuple(d["terms"]), tuple(d["doc_freq"]))


def build_vocabulary(
    docs: Sequence[TokenizedDoc], min_df: int = 5, max_df_fraction: float = 0.5
) -> Vocabulary:
    """Keep terms with ``min_df <= df <= max_df_fraction * n_docs``, indexed lexicographically."""
    if min_df < 1:
        raise VocabularyError("min_df must be >= 1")
    if not 0 < max_df_fraction <= 1:
        raise VocabularyError("max_df_fraction must be in (0, 1]")
    df: Counter = Counter()
    for d in docs:
        df.update(set(d.tokens))
    ceiling = max_df_fraction * len(docs)
    kept = sorted(t for t, n in df.items() if min_df <= n <= ceiling)
    if not kept:
        raise VocabularyError(
            f"empty vocabulary: no term has document frequency in [{min_df}, {ceiling:g}] "
            f"over {len(docs)} document(s)"
        )
    return Vocabulary(tuple(kept), tuple(df[t] for t in kept))


@dataclass(frozen=True)
class BagOfWords:
    post_id: str
    items: tuple[tuple[int, int], ...]

    @property
    def n_tokens(self) -> int:
        return sum(c for _, c in self.items)


def to_bow(doc: TokenizedDoc, vocab: Vocabulary) -> BagOfWords:
    counts = Counter(vocab.index(t) for t in doc.tokens if t in vocab)
    return BagOfWords(doc.post_id, tuple(sorted(counts.items())))


def write_docs(docs: Iterable[TokenizedDoc], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps(d.to_json(), ensure_ascii=False) + "\n")


def read_docs(path: str | Path) -> list[TokenizedDoc]:
    with open(path, encoding="utf-8") as fh:
        return [TokenizedDoc.from_json(json.loads(ln)) for ln in fh if ln.strip()]
